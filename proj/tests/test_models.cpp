#include <gtest/gtest.h>

#include "support.hpp"

using namespace gravchannel;
using gravchannel::testing::exchange;
using gravchannel::testing::ktm;
using gravchannel::testing::max_abs;
using gravchannel::testing::rel_err;

namespace {

void expect_well_formed(const QuadraticGenerator& g) {
    EXPECT_TRUE(g.is_well_formed());
    EXPECT_TRUE(g.diffusion == g.diffusion.transpose());
    EXPECT_TRUE(g.drift.allFinite() && g.diffusion.allFinite());
}

void expect_exchange_symmetric(const QuadraticGenerator& g) {
    const Mat P = exchange();
    EXPECT_TRUE(Mat(P * g.drift * P.transpose()) == g.drift);
    EXPECT_TRUE(Mat(P * g.diffusion * P.transpose()) == g.diffusion);
    EXPECT_TRUE(Mat(P * g.ham * P.transpose()) == g.ham);
}

}  // namespace

TEST(LindbladToGenerator, AnticommutatorDampsMomentum) {
    const UnitConstants u{1.3, 1.0, 1.0};
    const double K = 0.7, alpha = 0.2;
    const auto g = lindblad_to_generator(
        {anti_commutator(K * alpha / (2.0 * u.hbar * u.hbar), 2, 0, 1)}, 1, u);
    EXPECT_NEAR(g.drift(1, 1), -K * alpha / u.hbar, 1e-15);
    EXPECT_EQ(g.drift(0, 0), 0.0);
    EXPECT_EQ(g.drift(0, 1), 0.0);
    EXPECT_EQ(g.drift(1, 0), 0.0);
    EXPECT_TRUE(g.diffusion.isZero(0.0));
}

TEST(LindbladToGenerator, PositionDoubleCommutatorInjectsMomentumNoise) {
    const UnitConstants u{0.8, 1.0, 1.0};
    const double K = 0.5;
    const auto g = lindblad_to_generator({double_commutator(K / (2.0 * u.hbar), 2, 0, 0)}, 1, u);
    EXPECT_NEAR(g.diffusion(1, 1), u.hbar * K, 1e-15);
    EXPECT_EQ(g.diffusion(0, 0), 0.0);
    EXPECT_EQ(g.diffusion(0, 1), 0.0);
    EXPECT_TRUE(g.drift.isZero(0.0));
}

TEST(LindbladToGenerator, EmptyListGivesZeroGenerator) {
    const auto g = lindblad_to_generator({}, 2, UnitConstants{});
    EXPECT_TRUE(g.drift.isZero(0.0));
    EXPECT_TRUE(g.diffusion.isZero(0.0));
    EXPECT_TRUE(g.constant_drift.isZero(0.0));
}

TEST(LindbladToGenerator, RejectsWrongDimension) {
    EXPECT_THROW(lindblad_to_generator({DoubleCommutatorTerm{1.0, Vec::Ones(3), Vec::Ones(3)}}, 2,
                                       UnitConstants{}),
                 InvalidArgument);
}

TEST(KtmBuilder, MinimisedGammaIsTwiceHbarK) {
    const UnitConstants u{1.7, 1.0, 1.0};
    const auto p = resolve_gammas(ktm(1.0, 1.0, 0.0, 0.4), u);
    EXPECT_DOUBLE_EQ(p.gamma1, 2.0 * u.hbar * 0.4);
    EXPECT_DOUBLE_EQ(p.gamma2, 2.0 * u.hbar * 0.4);
}

TEST(KtmBuilder, CouplingFromSeparation) {
    const UnitConstants u{1.0, 2.0, 1.0};
    KtmParams p;
    p.m1 = 1.5;
    p.m2 = 0.5;
    p.d = 2.0;
    EXPECT_DOUBLE_EQ(coupling_constant(p, u), 2.0 * 2.0 * 1.5 * 0.5 / 8.0);
}

TEST(KtmBuilder, AlphaZeroKeepsOnlyHamiltonianAndPositionDiffusion) {
    const UnitConstants u{};
    const auto g = build_dissipative_ktm_generator(ktm(1.0, 1.0, 0.0, 0.3), u);
    EXPECT_TRUE(g.drift == symplectic_form(2) * g.ham);
    for (int i = 0; i < 4; i += 2)
        for (int j = 0; j < 4; ++j) {
            EXPECT_EQ(g.diffusion(i, j), 0.0);
            EXPECT_EQ(g.diffusion(j, i), 0.0);
        }
    EXPECT_GT(g.diffusion(1, 1), 0.0);
    const auto plain = build_ktm_generator(ktm(1.0, 1.0, 0.0, 0.3), u);
    EXPECT_TRUE(plain.drift == g.drift);
    EXPECT_TRUE(plain.diffusion == g.diffusion);
}

TEST(KtmBuilder, PlainBuilderRejectsAlpha) {
    EXPECT_THROW(build_ktm_generator(ktm(1.0, 1.0, 0.1, 0.3), UnitConstants{}), InvalidArgument);
}

TEST(KtmBuilder, AlphaContinuity) {
    const UnitConstants u{};
    for (bool minimized : {true, false}) {
        auto p0 = ktm(1.2, 0.9, 0.0, 0.35);
        p0.minimized_gamma = minimized;
        p0.gamma1 = p0.gamma2 = 0.8;
        auto p1 = p0;
        p1.alpha1 = p1.alpha2 = 1e-6;
        const auto g0 = build_ktm_generator(p0, u);
        const auto g1 = build_dissipative_ktm_generator(p1, u);
        auto check = [](const Mat& a, const Mat& b) {
            for (Eigen::Index i = 0; i < a.size(); ++i)
                if (b(i) != 0.0) EXPECT_LE(rel_err(a(i), b(i)), 1e-5);
                else EXPECT_LE(std::abs(a(i)), 1e-5);
        };
        check(g1.drift, g0.drift);
        check(g1.diffusion, g0.diffusion);
        check(g1.ham, g0.ham);
    }
}

TEST(KtmBuilder, RejectsZeroGammaWithCoupling) {
    auto p = ktm(1.0, 1.0, 0.0, 0.3);
    p.minimized_gamma = false;
    EXPECT_THROW(build_ktm_generator(p, UnitConstants{}), InvalidArgument);
}

TEST(KtmBuilder, WarnsOnInvertedTrap) {
    const auto g = build_ktm_generator(ktm(1.0, 0.3, 0.0, 0.5), UnitConstants{});
    EXPECT_FALSE(g.warnings.empty());
    const auto ok = build_ktm_generator(ktm(1.0, 1.0, 0.0, 0.3), UnitConstants{});
    EXPECT_TRUE(ok.warnings.empty());
}

TEST(Builders, WellFormedAndExchangeSymmetric) {
    const UnitConstants u{0.9, 1.1, 1.3};
    auto diss = ktm(0.7, 1.3, 0.15, 0.25);
    diss.include_delta_h0 = true;
    CaldeiraParams cal;
    cal.lambda1 = cal.lambda2 = 0.2;
    cal.T = 3.0;
    std::vector<QuadraticGenerator> gens{
        build_ktm_generator(ktm(0.7, 1.3, 0.0, 0.25), u),
        build_dissipative_ktm_generator(ktm(0.7, 1.3, 0.15, 0.25), u),
        build_dissipative_ktm_generator(diss, u),
        build_td_linear_generator(TdLinearParams::pair(0.8, 2.5, 0.1, 1.0, 1.2), u),
        build_caldeira_generator(cal, u),
    };
    for (const auto& g : gens) {
        expect_well_formed(g);
        expect_exchange_symmetric(g);
    }
}

TEST(TdBuilder, TranslationInvariantBitForBit) {
    const UnitConstants u{};
    TdLinearParams p{{1.0, 0.5, 2.0}, {0.5, 2.25, 7.0}, {0.1, 0.2, 0.05}, 1.0, 1.0};
    const auto g = build_td_linear_generator(p, u);
    for (double shift : {1024.0, -3.0, 0.125}) {
        auto q = p;
        for (double& x : q.x0) x += shift;
        const auto h = build_td_linear_generator(q, u);
        EXPECT_TRUE(h.drift == g.drift);
        EXPECT_TRUE(h.diffusion == g.diffusion);
        EXPECT_TRUE(h.ham == g.ham);
    }
    expect_well_formed(g);
}

TEST(TdBuilder, HamiltonianApproachesKtmAtLargeSeparation) {
    const UnitConstants u{};
    const double m = 1.0, omega = 1.0, alpha = 0.05, R0 = 1.0, d = 20.0;
    const auto td = build_td_linear_generator(TdLinearParams::pair(m, d, alpha, R0, omega), u);
    const auto kt = build_dissipative_ktm_generator(
        ktm(m, omega, alpha, ktm_equivalent_stiffness(m, d, u)), u);
    for (Eigen::Index i = 0; i < 16; ++i)
        if (kt.ham(i) != 0.0) EXPECT_LE(rel_err(td.ham(i), kt.ham(i)), 1e-3) << i;
        else EXPECT_EQ(td.ham(i), 0.0);
    // CoM/rel Hamiltonians after the split agree as well
    const auto [tcm, trel] = split_com_rel(td);
    const auto [kcm, krel] = split_com_rel(kt);
    for (Eigen::Index i = 0; i < 4; ++i) {
        if (kcm.ham(i) != 0.0) EXPECT_LE(rel_err(tcm.ham(i), kcm.ham(i)), 1e-3);
        if (krel.ham(i) != 0.0) EXPECT_LE(rel_err(trel.ham(i), krel.ham(i)), 1e-3);
    }
}

TEST(TdBuilder, SingleParticleHasNoCrossTerms) {
    TdLinearParams p{{1.0}, {0.0}, {0.0}, 1.0, 1.0};
    const auto g = build_td_linear_generator(p, UnitConstants{});
    EXPECT_EQ(g.n_modes, 1);
    EXPECT_DOUBLE_EQ(g.diffusion(1, 1), 2.0 * td_linear_injection_per_particle(1.0, 1.0, UnitConstants{}));
}

TEST(CaldeiraBuilder, ZeroCouplingIsUnitary) {
    CaldeiraParams p;
    const auto g = build_caldeira_generator(p, UnitConstants{});
    EXPECT_TRUE(g.diffusion.isZero(0.0));
    EXPECT_TRUE(g.drift == symplectic_form(2) * g.ham);
}

TEST(CaldeiraBuilder, HighTemperatureDropsMomentumDiffusion) {
    CaldeiraParams p;
    p.lambda1 = p.lambda2 = 0.1;
    p.T = 2.0;
    const auto full = build_caldeira_generator(p, UnitConstants{});
    p.high_T = true;
    const auto high = build_caldeira_generator(p, UnitConstants{});
    EXPECT_GT(full.diffusion(0, 0), 0.0);
    EXPECT_EQ(high.diffusion(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(full.diffusion(1, 1), high.diffusion(1, 1));
}

TEST(SplitComRel, DissipativeKtmPositionDiffusion) {
    const UnitConstants u{1.4, 1.0, 1.0};
    const double K = 0.3;
    const auto g = build_dissipative_ktm_generator(ktm(1.0, 1.0, 0.1, K), u);
    const auto [cm, rel] = split_com_rel(g);
    // -c [x, [x, rho]] adds 2 c hbar^2 to D_pp: c = K/hbar (cm), K/(4 hbar) (rel)
    EXPECT_NEAR(cm.diffusion(1, 1), 2.0 * (K / u.hbar) * u.hbar * u.hbar, 1e-14);
    EXPECT_NEAR(rel.diffusion(1, 1), 2.0 * (K / (4.0 * u.hbar)) * u.hbar * u.hbar, 1e-14);
}

TEST(SplitComRel, TdTrapFrequencies) {
    const UnitConstants u{};
    const double m = 1.3, omega = 0.9, d = 1.7, R0 = 0.8;
    const auto g = build_td_linear_generator(TdLinearParams::pair(m, d, 0.1, R0, omega), u);
    const auto [cm, rel] = split_com_rel(g);
    const auto e = eta_closed(R0, d);
    EXPECT_LE(rel_err(cm.ham(0, 0), 2.0 * m * omega * omega), 1e-14);
    EXPECT_LE(rel_err(rel.ham(0, 0), 0.5 * m * (omega * omega + 2.0 * u.G * m * e.eta12)), 1e-14);
    EXPECT_LE(rel_err(cm.ham(1, 1), 1.0 / (2.0 * m)), 1e-15);
    EXPECT_LE(rel_err(rel.ham(1, 1), 2.0 / m), 1e-15);
}

TEST(SplitComRel, FreeOscillatorsRescaleMass) {
    const double m = 0.7, omega = 1.9;
    const auto g = build_ktm_generator(ktm(m, omega, 0.0, 0.0), UnitConstants{});
    const auto [cm, rel] = split_com_rel(g);
    for (const auto* b : {&cm, &rel}) {
        EXPECT_TRUE(b->diffusion.isZero(0.0));
        EXPECT_TRUE(b->drift.isApprox(symplectic_form(1) * b->ham, 1e-15));
    }
    EXPECT_NEAR(cm.ham(0, 0), 2.0 * m * omega * omega, 1e-14);
    EXPECT_NEAR(cm.ham(1, 1), 1.0 / (2.0 * m), 1e-14);
    EXPECT_NEAR(rel.ham(0, 0), 0.5 * m * omega * omega, 1e-14);
    EXPECT_NEAR(rel.ham(1, 1), 2.0 / m, 1e-14);
    EXPECT_NEAR(cm.ham(0, 1), 0.0, 1e-15);
    EXPECT_NEAR(rel.ham(0, 1), 0.0, 1e-15);
}

TEST(SplitComRel, RejectsAsymmetricParameters) {
    auto p = ktm(1.0, 1.0, 0.1, 0.3);
    p.m2 = 2.0;
    const auto g = build_dissipative_ktm_generator(p, UnitConstants{});
    EXPECT_THROW(split_com_rel(g), InvalidArgument);
}

TEST(SplitComRel, TransformIsCanonical) {
    const Mat T = com_rel::transform();
    const Mat omega = symplectic_form(2);
    EXPECT_TRUE((T * omega * T.transpose()).isApprox(omega, 1e-15));
}

TEST(ModelSpecValidation, RejectsBadParameters) {
    auto p = ktm(-1.0, 1.0, 0.0, 0.1);
    EXPECT_THROW(ModelSpec::ktm(p).validate(), InvalidArgument);
    TdLinearParams td{{1.0, 1.0}, {0.0, 0.0}, {0.0, 0.0}, 1.0, 1.0};
    EXPECT_THROW(ModelSpec::td_linear(td).validate(), InvalidArgument);
    CaldeiraParams c;
    c.T = 0.0;
    EXPECT_THROW(ModelSpec::caldeira(c).validate(), InvalidArgument);
}
