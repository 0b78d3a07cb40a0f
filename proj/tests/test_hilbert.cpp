#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "support.hpp"

using namespace gravchannel;
using namespace gravchannel::hilbert;
using gravchannel::testing::ktm;
using gravchannel::testing::rel_err;

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = a + (b - a) * i / (n - 1);
    return t;
}

CVec coherent2(const TwoModeOperators& ops, double x1, double p1, double x2, double p2,
               const UnitConstants& u = {}) {
    const auto& a = ops.mode[0];
    const auto& b = ops.mode[1];
    return product_state(coherent_state(ops.ncut, coherent_amplitude(x1, p1, a.m, a.omega, u)),
                         coherent_state(ops.ncut, coherent_amplitude(x2, p2, b.m, b.omega, u)));
}

std::vector<ModelSpec> all_models() {
    auto diss = ktm(1.0, 1.0, 0.2, 0.1);
    auto diss_h0 = diss;
    diss_h0.include_delta_h0 = true;
    auto general = ktm(1.0, 1.1, 0.15, 0.1);
    general.minimized_gamma = false;
    general.gamma1 = 0.5;
    general.gamma2 = 0.3;
    CaldeiraParams cal;
    cal.lambda1 = cal.lambda2 = 0.05;
    cal.T = 0.5;
    return {ModelSpec::ktm(ktm(1.0, 1.0, 0.0, 0.05)),
            ModelSpec::dissipative_ktm(diss),
            ModelSpec::dissipative_ktm(diss_h0),
            ModelSpec::dissipative_ktm(general),
            ModelSpec::td_linear(TdLinearParams::pair(1.0, 3.0, 0.1, 1.0, 1.0)),
            ModelSpec::caldeira(cal)};
}

}  // namespace

TEST(CanonicalOperators, VacuumValues) {
    const UnitConstants u{0.9, 1.0, 1.0};
    const double m = 1.4, omega = 0.8;
    const auto op = canonical_operators(12, m, omega, u);
    EXPECT_NEAR((op.x * op.x)(0, 0).real(), u.hbar / (2.0 * m * omega), 1e-15);
    EXPECT_NEAR(op.h0(0, 0).real(), u.hbar * omega / 2.0, 1e-15);
}

TEST(CanonicalOperators, CommutatorDefectOnlyAtTopLevels) {
    const UnitConstants u{1.3, 1.0, 1.0};
    const int n = 12;
    const auto op = canonical_operators(n, 0.7, 1.9, u);
    const CMat defect = op.x * op.p - op.p * op.x - cplx(0.0, u.hbar) * CMat::Identity(n, n);
    EXPECT_LT(defect.leftCols(n - 2).norm(), 1e-12);
    EXPECT_GT(defect.rightCols(1).norm(), 1.0);
    EXPECT_THROW(canonical_operators(3, 1.0, 1.0, u), InvalidArgument);
}

TEST(DenseRhs, TracelessAndHermitianForAllModels) {
    for (const auto& spec : all_models()) {
        const auto model = make_dense_model(spec, 10);
        const CMat rho = pure_density(coherent2(model.ops, 0.3, -0.2, 0.1, 0.4));
        const CMat d = dense_rhs(model, rho);
        EXPECT_LT(std::abs(d.trace()), 1e-12) << to_string(spec.kind);
        EXPECT_LT((d - d.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(DenseRhs, MomentDerivativesMatchGenerator) {
    for (const auto& spec : all_models()) {
        const auto model = make_dense_model(spec, 18);
        const auto gen = build_generator(spec);
        const CMat rho = pure_density(coherent2(model.ops, 0.2, 0.1, -0.1, 0.15));
        const CMat d = dense_rhs(model, rho);
        const GaussianState s = dense_moments(model, rho);
        const auto expected = moment_rhs(gen, s);
        for (int i = 0; i < 4; ++i) {
            EXPECT_NEAR(expect(model.ops.r[i], d), expected.dmean(i), 1e-9) << to_string(spec.kind);
            for (int j = 0; j < 4; ++j) {
                const SpMat prod = model.ops.r[i] * model.ops.r[j];
                const double d2 = 0.5 * expect(SpMat(prod + SpMat(prod.adjoint())), d);
                const double dcov = d2 - expected.dmean(i) * s.mean(j) - s.mean(i) * expected.dmean(j);
                EXPECT_NEAR(dcov, expected.dcov(i, j), 1e-8) << to_string(spec.kind) << i << j;
            }
        }
    }
}

TEST(DenseRhs, CaldeiraWithoutCouplingIsUnitary) {
    const auto spec = ModelSpec::caldeira(CaldeiraParams{});
    const auto model = make_dense_model(spec, 8);
    const CMat rho = pure_density(coherent2(model.ops, 0.4, 0.0, 0.0, 0.3));
    const CMat h = hilbert::detail::quadratic_op(model.ops, build_generator(spec).ham);
    const CMat expected = cplx(0.0, -1.0) * (h * rho - rho * h);
    EXPECT_LT((dense_rhs(model, rho) - expected).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(DenseIntegrate, KtmHeatingSlope) {
    const double K = 0.05;
    const auto model = make_dense_model(ModelSpec::ktm(ktm(1.0, 1.0, 0.0, K)), 12);
    const auto t = linspace(0.0, 5.0, 6);
    const auto states = dense_integrate(model, dense_vacuum(model), t);
    const double slope = (dense_energy(model, states.back().rho) - dense_energy(model, states.front().rho)) / 5.0;
    EXPECT_LE(rel_err(slope, K), 1e-4);
}

TEST(DenseIntegrate, ClosedSystemConservesPurity) {
    const auto model = make_dense_model(ModelSpec::ktm(ktm(1.0, 1.0, 0.0, 0.0)), 12);
    const DenseState rho0{pure_density(coherent2(model.ops, 0.3, 0.0, 0.0, 0.2)), 12};
    const auto states = dense_integrate(model, rho0, linspace(0.0, 5.0, 6));
    for (const auto& s : states) EXPECT_NEAR(diagnose(s.rho, 12).purity, 1.0, 1e-9);
}

TEST(DenseIntegrate, DissipativeKtmTracksMoments) {
    for (bool h0 : {false, true}) {
        auto p = ktm(1.0, 1.0, 0.2, 0.1);
        p.include_delta_h0 = h0;
        const auto spec = ModelSpec::dissipative_ktm(p);
        const auto model = make_dense_model(spec, 12);
        const auto t = linspace(0.0, 2.0 * std::numbers::pi, 5);
        const auto rho0 = dense_vacuum(model);
        const auto dense = dense_integrate(model, rho0, t);
        const auto gen = build_generator(spec);
        const auto gauss = integrate_moments(gen, dense_moments(model, rho0.rho), t);
        for (std::size_t i = 0; i < t.size(); ++i) {
            const auto s = dense_moments(model, dense[i].rho);
            const double scale = gauss[i].cov.cwiseAbs().maxCoeff();
            EXPECT_LE((s.cov - gauss[i].cov).cwiseAbs().maxCoeff() / scale, 1e-3);
            EXPECT_LE(rel_err(dense_energy(model, dense[i].rho), energy(gauss[i], gen.ham)), 1e-3);
        }
    }
}

TEST(DenseIntegrate, InvariantsHoldForAllModels) {
    for (const auto& spec : all_models()) {
        const auto model = make_dense_model(spec, 12);
        std::vector<DenseState> states;
        ASSERT_NO_THROW(states = dense_integrate(model, dense_vacuum(model), linspace(0.0, 2.0, 5)))
            << to_string(spec.kind);
        for (const auto& s : states) {
            const auto d = diagnose(s.rho, 12);
            EXPECT_LE(d.hermiticity, 1e-12);
            EXPECT_LE(d.trace_defect, 1e-10);
            EXPECT_GE(d.min_eigenvalue, -1e-8);
            EXPECT_LT(d.leakage, 1e-6);
        }
    }
}

TEST(DenseIntegrate, LeakageGuardFires) {
    const auto model = make_dense_model(ModelSpec::ktm(ktm(1.0, 1.0, 0.0, 0.5)), 6);
    EXPECT_THROW(dense_integrate(model, dense_vacuum(model), linspace(0.0, 20.0, 5)), NumericalFailure);
}

TEST(SseStep, NoCouplingIsUnitaryEvolution) {
    const auto spec = ModelSpec::ktm(ktm(1.0, 1.3, 0.0, 0.0));
    auto model = make_sse_model(spec, 10);
    const CVec psi0 = coherent2(model.ops, 0.5, 0.1, -0.3, 0.2);
    Trajectory tr{psi0, 0, 0.0};
    const double dt = 0.01;
    sse_step(tr, model, dt, {0.7, -1.2});
    const CMat h = hilbert::detail::quadratic_op(model.ops, build_generator(spec).ham);
    Eigen::SelfAdjointEigenSolver<CMat> es(h);
    CVec phase(es.eigenvalues().size());
    for (Eigen::Index i = 0; i < phase.size(); ++i) phase(i) = std::exp(cplx(0.0, -es.eigenvalues()(i) * dt));
    const CVec expected = es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint() * psi0;
    EXPECT_LT((tr.psi - expected).norm(), 1e-12);
}

TEST(SseStep, ZeroNoiseDriftMatchesStochasticEquation) {
    const double K = 0.2, hbar = 1.0;
    const auto spec = ModelSpec::ktm(ktm(1.0, 1.0, 0.0, K));
    auto model = make_sse_model(spec, 14);
    const double gamma = 2.0 * hbar * K, chi = K;
    const CVec psi0 = coherent2(model.ops, 0.4, -0.2, -0.3, 0.1);
    // right-hand side of the stochastic equation with dW = 0, H0 with Omega^2 = omega^2 - K/m
    const auto& ops = model.ops;
    SpMat h0(ops.dim(), ops.dim());
    for (int k = 0; k < 2; ++k)
        h0 += SpMat(ops.p(k) * ops.p(k)) * cplx(0.5) + SpMat(ops.x(k) * ops.x(k)) * cplx(0.5 * (1.0 - K));
    auto drift = [&](const CVec& psi) {
        CVec out = cplx(0.0, -1.0 / hbar) * (h0 * psi);
        double mean[2];
        for (int k = 0; k < 2; ++k) mean[k] = psi.dot(ops.x(k) * psi).real();
        for (int k = 0; k < 2; ++k) {
            const int j = 1 - k;
            const CVec c = ops.x(k) * psi - mean[k] * psi;
            out += cplx(0.0, -chi / (2.0 * hbar)) * (ops.x(j) * c);
            out += -gamma / (8.0 * hbar * hbar) * (ops.x(k) * c - mean[k] * c);
            out += cplx(0.0, -chi * mean[k] / hbar) * (ops.x(j) * psi);
            out += -chi * chi / (2.0 * gamma) * (ops.x(j) * (ops.x(j) * psi));
        }
        return out;
    };
    double err[2];
    for (int r = 0; r < 2; ++r) {
        const double dt = r == 0 ? 1e-3 : 5e-4;
        Trajectory tr{psi0, 0, 0.0};
        sse_step(tr, model, dt, {0.0, 0.0});
        CVec ref = psi0 + dt * drift(psi0);
        ref /= ref.norm();
        err[r] = (tr.psi - ref).norm();
    }
    EXPECT_LT(err[0], 1e-5);
    EXPECT_NEAR(err[0] / err[1], 4.0, 0.4);
}

TEST(SseStep, RecordStatistics) {
    const auto spec = ModelSpec::dissipative_ktm(ktm(1.0, 1.0, 0.2, 0.3));
    auto model = make_sse_model(spec, 10);
    const CVec psi0 = coherent2(model.ops, 0.5, 0.0, -0.4, 0.0);
    const double dt = 1e-3;
    const int n = 20000;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    std::vector<double> r1(n);
    for (int i = 0; i < n; ++i) {
        Trajectory tr{psi0, 0, 0.0};
        r1[i] = sse_step(tr, model, dt, {normal(rng), normal(rng)}).r[0];
    }
    double mean = 0.0, var = 0.0;
    for (double r : r1) mean += r / n;
    for (double r : r1) var += (r - mean) * (r - mean) / (n - 1);
    // record centred on 1/2 <A + A^dagger> after the unitary part of the step
    Trajectory tr{psi0, 0, 0.0};
    model.prepare(dt);
    hilbert::detail::apply_local_unitary(model, tr.psi);
    const double centre = tr.psi.dot(model.ops.x(0) * tr.psi).real();
    const double expected_var = 1.0 / (model.gamma[0] * dt);
    EXPECT_LE(std::abs(mean - centre), 4.0 * std::sqrt(expected_var / n));
    EXPECT_LE(rel_err(var, expected_var), 0.05);
}

TEST(SseStep, RejectsNonKtmModels) {
    EXPECT_THROW(make_sse_model(ModelSpec::caldeira(CaldeiraParams{}), 8), InvalidArgument);
}

TEST(Ensemble, NoiseFreeSingleTrajectoryEqualsDeterministicRun) {
    const auto spec = ModelSpec::dissipative_ktm(ktm(1.0, 1.0, 0.2, 0.1));
    auto model = make_sse_model(spec, 10);
    const CVec psi0 = coherent2(model.ops, 0.3, 0.0, 0.0, 0.1);
    EnsembleOptions opt;
    opt.n_traj = 1;
    opt.dt = 1e-2;
    opt.zero_noise = true;
    const auto st = ensemble_run(model, psi0, {0.0, 0.5}, opt);
    Trajectory tr{psi0, 0, 0.0};
    for (int i = 0; i < 50; ++i) sse_step(tr, model, 1e-2, {0.0, 0.0});
    const auto o = sse_observables(model, tr.psi);
    for (int k = 0; k < kObservableCount; ++k) EXPECT_EQ(st.mean[1][k], o[k]);
}

TEST(Ensemble, DeterministicAcrossThreadCounts) {
    const auto model = make_sse_model(ModelSpec::dissipative_ktm(ktm(1.0, 1.0, 0.2, 0.1)), 8);
    const CVec psi0 = fock_state(8, 0, 0);
    EnsembleOptions opt;
    opt.n_traj = 48;
    opt.dt = 5e-3;
    opt.master_seed = 99;
    opt.threads = 1;
    const auto a = ensemble_run(model, psi0, {0.0, 0.25, 0.5}, opt);
    opt.threads = 4;
    const auto b = ensemble_run(model, psi0, {0.0, 0.25, 0.5}, opt);
    opt.master_seed = 100;
    const auto c = ensemble_run(model, psi0, {0.0, 0.25, 0.5}, opt);
    for (std::size_t i = 0; i < 3; ++i)
        for (int k = 0; k < kObservableCount; ++k) {
            EXPECT_EQ(a.mean[i][k], b.mean[i][k]);
            EXPECT_EQ(a.stderr_[i][k], b.stderr_[i][k]);
        }
    EXPECT_NE(a.mean[2][kX1], c.mean[2][kX1]);
}

TEST(Ensemble, MeanIncrementReproducesMasterEquation) {
    const auto spec = ModelSpec::dissipative_ktm(ktm(1.0, 1.0, 0.3, 0.1));
    auto model = make_sse_model(spec, 12);
    const auto dense = make_dense_model(spec, 12);
    const CVec psi0 = coherent2(model.ops, 0.8, 0.0, -0.3, 0.4);
    const CMat rho0 = pure_density(psi0);
    const CMat drho = dense_rhs(dense, rho0);
    const double dt = 1e-3;
    const int n = 2000;
    std::vector<SpMat> obs{model.ops.x(0), SpMat(model.ops.x(0) * model.ops.x(0)), model.energy_op,
                           SpMat(model.ops.x(0) * model.ops.x(1))};
    std::mt19937_64 rng(17);
    std::normal_distribution<double> normal;
    std::vector<std::vector<double>> inc(obs.size(), std::vector<double>(n));
    std::vector<double> base(obs.size());
    for (std::size_t o = 0; o < obs.size(); ++o) base[o] = psi0.dot(obs[o] * psi0).real();
    for (int i = 0; i < n; ++i) {
        Trajectory tr{psi0, 0, 0.0};
        sse_step(tr, model, dt, {normal(rng), normal(rng)});
        for (std::size_t o = 0; o < obs.size(); ++o)
            inc[o][i] = (tr.psi.dot(obs[o] * tr.psi).real() - base[o]) / dt;
    }
    for (std::size_t o = 0; o < obs.size(); ++o) {
        double mean = 0.0, var = 0.0;
        for (double v : inc[o]) mean += v / n;
        for (double v : inc[o]) var += (v - mean) * (v - mean) / (n - 1);
        const double target = expect(obs[o], drho);
        EXPECT_LE(std::abs(mean - target), 4.0 * std::sqrt(var / n)) << o;
    }
}

TEST(Ensemble, TracksDenseOracle) {
    for (double alpha : {0.0, 0.3}) {
        const auto p = ktm(1.0, 1.0, alpha, 0.1);
        const auto spec = alpha == 0.0 ? ModelSpec::ktm(p) : ModelSpec::dissipative_ktm(p);
        const auto model = make_sse_model(spec, 12);
        const auto dense = make_dense_model(spec, 12);
        const CVec psi0 = coherent2(model.ops, 0.8, 0.0, -0.3, 0.4);
        const auto t = linspace(0.0, 1.0, 3);
        EnsembleOptions opt;
        opt.n_traj = 500;
        opt.master_seed = 3;
        const auto st = ensemble_run(model, psi0, t, opt);
        const auto ref = dense_integrate(dense, DenseState{pure_density(psi0), 12}, t);
        for (std::size_t i = 1; i < t.size(); ++i) {
            const CMat& rho = ref[i].rho;
            const double x1 = expect(dense.ops.x(0), rho);
            const double xx1 = expect(SpMat(dense.ops.x(0) * dense.ops.x(0)), rho);
            const double e = dense_energy(dense, rho);
            EXPECT_LE(std::abs(st.mean[i][kX1] - x1), 4.0 * st.stderr_[i][kX1]);
            EXPECT_LE(std::abs(st.mean[i][kXX1] - xx1), 4.0 * st.stderr_[i][kXX1]);
            EXPECT_LE(std::abs(st.mean[i][kEnergy] - e), 4.0 * st.stderr_[i][kEnergy]);
        }
    }
}

TEST(Ensemble, TimeStepBiasVanishesLinearly) {
    // coarse steps so that the time-step bias dominates the sampling error at the largest dt
    const auto spec = ModelSpec::ktm(ktm(1.0, 1.0, 0.0, 0.5));
    const auto model = make_sse_model(spec, 12);
    const auto dense = make_dense_model(spec, 12);
    const auto& mode = model.ops.mode[0];
    const CVec psi0 = product_state(coherent_state(12, coherent_amplitude(0.6, 0.0, mode.m, mode.omega, {})),
                                    coherent_state(12, cplx(0.0)));
    const std::vector<double> t{0.0, 1.0};
    // both engines share the same truncated operators, so top-level leakage is common to them
    DenseOptions dopt;
    dopt.dt = 1e-3;
    dopt.check = false;
    const auto ref = dense_integrate(dense, DenseState{pure_density(psi0), 12}, t, dopt);
    const double exact = dense_energy(dense, ref[1].rho);
    const double dts[3] = {0.2, 0.1, 0.05};
    double err[3], var[3];
    for (int r = 0; r < 3; ++r) {
        EnsembleOptions opt;
        opt.n_traj = 30000;
        opt.dt = dts[r];
        opt.master_seed = 1234 + r;
        const auto st = ensemble_run(model, psi0, t, opt);
        err[r] = st.mean[1][kEnergy] - exact;
        var[r] = st.stderr_[1][kEnergy] * st.stderr_[1][kEnergy];
    }
    EXPECT_GT(err[0], 4.0 * std::sqrt(var[0]));
    // weighted least squares err = c0 + c1 dt
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int r = 0; r < 3; ++r) {
        const double w = 1.0 / var[r];
        sw += w;
        sx += w * dts[r];
        sy += w * err[r];
        sxx += w * dts[r] * dts[r];
        sxy += w * dts[r] * err[r];
    }
    const double det = sw * sxx - sx * sx;
    const double c0 = (sxx * sy - sx * sxy) / det;
    const double c1 = (sw * sxy - sx * sy) / det;
    EXPECT_LE(std::abs(c0), 4.0 * std::sqrt(sxx / det));
    EXPECT_GT(c1, 4.0 * std::sqrt(sw / det));
}
