#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "gravchannel/errors.hpp"
#include "gravchannel/eta.hpp"
#include "gravchannel/generator.hpp"
#include "gravchannel/params.hpp"
#include "gravchannel/units.hpp"

namespace gravchannel {

/// Linearised gravitational stiffness K = 2 G m1 m2 / d^3 (or the explicit override).
inline double coupling_constant(const KtmParams& p, const UnitConstants& units) {
    detail::require(p.d > 0.0, "separation d must be > 0");
    if (p.stiffness) return *p.stiffness;
    return 2.0 * units.G * p.m1 * p.m2 / (p.d * p.d * p.d);
}

/// Information gain rate minimising the feedback-induced decoherence: gamma = 2 hbar K.
inline double optimal_gamma(double K, const UnitConstants& units) {
    detail::require(K >= 0.0, "K must be >= 0");
    return 2.0 * units.hbar * K;
}

/// Copy of `p` with gamma1 = gamma2 = 2 hbar K when the minimised choice is requested.
inline KtmParams resolve_gammas(KtmParams p, const UnitConstants& units) {
    if (p.minimized_gamma) {
        const double g = optimal_gamma(coupling_constant(p, units), units);
        p.gamma1 = g;
        p.gamma2 = g;
    }
    return p;
}

namespace detail {

inline void warn_inverted_traps(QuadraticGenerator& gen, const KtmParams& p, double K) {
    const double masses[2] = {p.m1, p.m2};
    const double omegas[2] = {p.omega1, p.omega2};
    for (int k = 0; k < 2; ++k) {
        const double big_omega2 = omegas[k] * omegas[k] - K / masses[k];
        if (big_omega2 < 0.0)
            gen.warnings.push_back("inverted trap: Omega_" + std::to_string(k + 1) +
                                   "^2 = " + std::to_string(big_omega2) + " < 0");
    }
}

// Hamiltonian H0 (trap renormalised by -K/m_k) + K x1 x2, shared by both KTM variants.
inline Mat ktm_hamiltonian(const KtmParams& p, double K) {
    Mat hm = Mat::Zero(4, 4);
    hm(0, 0) = p.m1 * p.omega1 * p.omega1 - K;
    hm(1, 1) = 1.0 / p.m1;
    hm(2, 2) = p.m2 * p.omega2 * p.omega2 - K;
    hm(3, 3) = 1.0 / p.m2;
    hm(0, 2) = hm(2, 0) = K;
    return hm;
}

// Position-diffusion coefficient of particle k (partner j) in the KTM family.
inline double ktm_position_diffusion(const KtmParams& p, double K, double gamma_k,
                                     double gamma_j, const UnitConstants& units) {
    const double hbar = units.hbar;
    if (p.minimized_gamma) return K / (2.0 * hbar);
    if (K != 0.0 && (gamma_k == 0.0 || gamma_j == 0.0))
        throw InvalidArgument("gamma must be > 0 when K != 0 (feedback noise diverges)");
    const double feedback = (K == 0.0) ? 0.0 : K * K / (2.0 * gamma_j);
    return gamma_k / (8.0 * hbar * hbar) + feedback;
}

inline std::vector<LindbladTerm> ktm_terms(const KtmParams& p, double K,
                                           const UnitConstants& units) {
    std::vector<LindbladTerm> terms;
    terms.emplace_back(HamiltonianTerm{ktm_hamiltonian(p, K)});
    terms.emplace_back(double_commutator(
        ktm_position_diffusion(p, K, p.gamma1, p.gamma2, units), 4, 0, 0));
    terms.emplace_back(double_commutator(
        ktm_position_diffusion(p, K, p.gamma2, p.gamma1, units), 4, 2, 2));
    return terms;
}

}  // namespace detail

/// Generator of the KTM master equation (minimised or general gamma); alphas must vanish.
inline QuadraticGenerator build_ktm_generator(const KtmParams& raw, const UnitConstants& units) {
    raw.validate();
    units.validate();
    detail::require(raw.alpha1 == 0.0 && raw.alpha2 == 0.0,
                    "build_ktm_generator requires alpha = 0; use the dissipative builder");
    const KtmParams p = resolve_gammas(raw, units);
    const double K = coupling_constant(p, units);
    auto gen = lindblad_to_generator(detail::ktm_terms(p, K, units), 2, units, "ktm");
    detail::warn_inverted_traps(gen, p, K);
    return gen;
}

/// Generator of the dissipative KTM master equation: Hamiltonian with K x1 x2, position
/// diffusion, friction, momentum diffusion and the feedback x-p cross diffusion.
inline QuadraticGenerator build_dissipative_ktm_generator(const KtmParams& raw,
                                                          const UnitConstants& units) {
    raw.validate();
    units.validate();
    const KtmParams p = resolve_gammas(raw, units);
    const double K = coupling_constant(p, units);
    const double hbar = units.hbar;
    const double h2 = hbar * hbar;

    auto terms = detail::ktm_terms(p, K, units);
    const double gammas[2] = {p.gamma1, p.gamma2};
    const double alphas[2] = {p.alpha1, p.alpha2};
    Mat delta_h = Mat::Zero(4, 4);
    for (int k = 0; k < 2; ++k) {
        const int j = 1 - k;
        const auto xk = x_index(k), pk = p_index(k), pj = p_index(j);
        const double ga = gammas[k] * alphas[k];
        if (ga != 0.0) {
            terms.emplace_back(anti_commutator(ga / (4.0 * h2 * hbar), 4, xk, pk));
            terms.emplace_back(
                double_commutator(ga * alphas[k] / (8.0 * h2 * h2), 4, pk, pk));
        }
        if (alphas[j] != 0.0 && K != 0.0)
            terms.emplace_back(double_commutator(-alphas[j] * K / (2.0 * h2), 4, xk, pj));
        // Delta H0 = -(gamma alpha / 8 hbar^2) {x, p}  <=>  Hm_xp = Hm_px = -gamma alpha / 4 hbar^2
        delta_h(xk, pk) = delta_h(pk, xk) = -ga / (4.0 * h2);
    }
    if (p.include_delta_h0) terms.emplace_back(HamiltonianTerm{delta_h});

    auto gen = lindblad_to_generator(terms, 2, units, "dissipative_ktm");
    detail::warn_inverted_traps(gen, p, K);
    return gen;
}

/// Terms of the two-particle quantum Brownian motion master equation; the momentum-diffusion
/// term is dropped when high_T is set.
inline std::vector<LindbladTerm> caldeira_terms(const CaldeiraParams& p, const UnitConstants& units) {
    p.validate();
    units.validate();
    const double hbar = units.hbar;
    const double kT = units.kB * p.T;
    const double masses[2] = {p.m1, p.m2};
    const double omegas[2] = {p.omega1, p.omega2};
    const double lambdas[2] = {p.lambda1, p.lambda2};

    Mat hm = Mat::Zero(4, 4);
    std::vector<LindbladTerm> terms;
    for (int k = 0; k < 2; ++k) {
        const auto xk = x_index(k), pk = p_index(k);
        hm(xk, xk) = masses[k] * omegas[k] * omegas[k];
        hm(pk, pk) = 1.0 / masses[k];
        if (lambdas[k] == 0.0) continue;
        terms.emplace_back(anti_commutator(lambdas[k] / hbar, 4, xk, pk));
        terms.emplace_back(
            double_commutator(2.0 * lambdas[k] * masses[k] * kT / (hbar * hbar), 4, xk, xk));
        if (!p.high_T)
            terms.emplace_back(double_commutator(lambdas[k] / (8.0 * masses[k] * kT), 4, pk, pk));
    }
    terms.insert(terms.begin(), HamiltonianTerm{hm});
    return terms;
}

inline QuadraticGenerator build_caldeira_generator(const CaldeiraParams& p,
                                                   const UnitConstants& units) {
    return lindblad_to_generator(caldeira_terms(p, units), 2, units,
                                 p.high_T ? "caldeira_high_T" : "caldeira");
}

/// Matrix of pair coefficients eta_kj for the TD particles (diagonal = self term).
inline Mat td_eta_matrix(const TdLinearParams& p) {
    const auto n = static_cast<Eigen::Index>(p.size());
    Mat eta(n, n);
    const double self = eta_self(p.R0);
    for (Eigen::Index k = 0; k < n; ++k) {
        eta(k, k) = self;
        for (Eigen::Index j = 0; j < k; ++j) {
            const double e = eta_pair(p.R0, std::abs(p.x0[k] - p.x0[j]));
            eta(k, j) = eta(j, k) = e;
        }
    }
    return eta;
}

/// Terms of the linearised dissipative TD master equation restricted to one dimension.
/// For two identical particles the Hamiltonian is H0(Omega) - G m^2 eta12 x1 x2 with
/// Omega^2 = omega^2 + G m eta12.
inline std::vector<LindbladTerm> td_linear_terms(const TdLinearParams& p, const UnitConstants& units) {
    p.validate();
    units.validate();
    const auto n = static_cast<Eigen::Index>(p.size());
    const Eigen::Index dim = 2 * n;
    const double hbar = units.hbar;
    const double G = units.G;
    const Mat eta = td_eta_matrix(p);

    Mat hm = Mat::Zero(dim, dim);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double mk = p.masses[k];
        hm(x_index(k), x_index(k)) += mk * p.omega * p.omega;
        hm(p_index(k), p_index(k)) = 1.0 / mk;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == k) continue;
            const double w = G * mk * p.masses[j] * eta(k, j);
            hm(x_index(k), x_index(k)) += w;
            hm(x_index(k), x_index(j)) = -w;
        }
    }

    std::vector<LindbladTerm> terms;
    terms.emplace_back(HamiltonianTerm{hm});
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double g = G * p.masses[k] * p.masses[j] * eta(k, j);
            if (g == 0.0) continue;
            const double ak = p.alphas[k], aj = p.alphas[j];
            terms.emplace_back(double_commutator(g / (2.0 * hbar), dim, x_index(k), x_index(j)));
            if (aj == 0.0) continue;
            terms.emplace_back(
                anti_commutator(g * aj / (2.0 * hbar * hbar), dim, x_index(k), p_index(j)));
            terms.emplace_back(
                double_commutator(g * aj / (2.0 * hbar * hbar), dim, x_index(k), p_index(j)));
            if (ak != 0.0)
                terms.emplace_back(double_commutator(g * ak * aj / (4.0 * hbar * hbar * hbar), dim,
                                                     p_index(k), p_index(j)));
        }
    }
    return terms;
}

inline QuadraticGenerator build_td_linear_generator(const TdLinearParams& p,
                                                    const UnitConstants& units) {
    auto gen = lindblad_to_generator(td_linear_terms(p, units),
                                     static_cast<Eigen::Index>(p.size()), units, "td_linear");
    for (Eigen::Index k = 0; k < gen.n_modes; ++k)
        if (gen.ham(x_index(k), x_index(k)) < 0.0)
            gen.warnings.push_back("inverted trap on particle " + std::to_string(k + 1));
    return gen;
}

/// Builds the generator matching the model tag.
inline QuadraticGenerator build_generator(const ModelSpec& spec) {
    switch (spec.kind) {
        case ModelKind::Ktm: return build_ktm_generator(spec.ktm_params(), spec.units);
        case ModelKind::DissipativeKtm:
            return build_dissipative_ktm_generator(spec.ktm_params(), spec.units);
        case ModelKind::TdLinear: return build_td_linear_generator(spec.td_params(), spec.units);
        case ModelKind::Caldeira: return build_caldeira_generator(spec.caldeira_params(), spec.units);
    }
    throw InvalidArgument("unknown model kind");
}

// ---------------------------------------------------------------------------------------------
// Centre-of-mass / relative coordinates:
//   x_cm = (x1 + x2)/2,  p_cm = p1 + p2,  x_rel = x1 - x2,  p_rel = (p1 - p2)/2.
// Every transform is written as explicit sums and differences so that cross blocks of
// exchange-symmetric inputs cancel exactly.

namespace com_rel {

/// r' = T r.
inline Mat transform() {
    Mat t = Mat::Zero(4, 4);
    t(0, 0) = 0.5; t(0, 2) = 0.5;
    t(1, 1) = 1.0; t(1, 3) = 1.0;
    t(2, 0) = 1.0; t(2, 2) = -1.0;
    t(3, 1) = 0.5; t(3, 3) = -0.5;
    return t;
}

// Rows combined as T M.
inline Mat rows_t(const Mat& m) {
    Mat out(4, m.cols());
    out.row(0) = 0.5 * (m.row(0) + m.row(2));
    out.row(1) = m.row(1) + m.row(3);
    out.row(2) = m.row(0) - m.row(2);
    out.row(3) = 0.5 * (m.row(1) - m.row(3));
    return out;
}

// Columns combined as M T^T.
inline Mat cols_tt(const Mat& m) { return rows_t(m.transpose()).transpose(); }

// Rows combined as T^{-T} M.
inline Mat rows_tinv_t(const Mat& m) {
    Mat out(4, m.cols());
    out.row(0) = m.row(0) + m.row(2);
    out.row(1) = 0.5 * (m.row(1) + m.row(3));
    out.row(2) = 0.5 * (m.row(0) - m.row(2));
    out.row(3) = m.row(1) - m.row(3);
    return out;
}

// Columns combined as M T^{-1}.
inline Mat cols_tinv(const Mat& m) { return rows_tinv_t(m.transpose()).transpose(); }

inline Vec apply(const Vec& r) { return rows_t(r); }

/// Covariance-type transform T S T^T.
inline Mat congruence(const Mat& s) { return cols_tt(rows_t(s)); }

}  // namespace com_rel

/// Splits a symmetric two-particle generator into decoupled centre-of-mass and relative
/// single-mode generators. Throws when the transformed generator is not block diagonal.
inline std::pair<QuadraticGenerator, QuadraticGenerator> split_com_rel(
    const QuadraticGenerator& gen, double tol = 1e-12) {
    detail::require(gen.n_modes == 2, "split_com_rel needs a two-mode generator");
    const Mat a = com_rel::rows_t(com_rel::cols_tinv(gen.drift));
    const Mat d = com_rel::congruence(gen.diffusion);
    const Mat h = com_rel::rows_tinv_t(com_rel::cols_tinv(gen.ham));
    const Vec b = com_rel::apply(gen.constant_drift);

    auto cross = [](const Mat& m) {
        return std::max(m.topRightCorner(2, 2).cwiseAbs().maxCoeff(),
                        m.bottomLeftCorner(2, 2).cwiseAbs().maxCoeff());
    };
    auto scale = [](const Mat& m) { return std::max(1.0, m.cwiseAbs().maxCoeff()); };
    if (cross(a) > tol * scale(a) || cross(d) > tol * scale(d) || cross(h) > tol * scale(h))
        throw InvalidArgument(
            "split_com_rel: generator is not block diagonal in centre-of-mass/relative "
            "coordinates (asymmetric parameters)");

    auto block = [&](Eigen::Index o, const char* tag) {
        QuadraticGenerator g = QuadraticGenerator::zero(1, gen.provenance + tag);
        g.drift = a.block(o, o, 2, 2);
        g.diffusion = d.block(o, o, 2, 2);
        g.diffusion = 0.5 * (g.diffusion + g.diffusion.transpose()).eval();
        g.ham = h.block(o, o, 2, 2);
        g.ham = 0.5 * (g.ham + g.ham.transpose()).eval();
        g.constant_drift = b.segment(o, 2);
        return g;
    };
    return {block(0, "/cm"), block(2, "/rel")};
}

/// Masses and basis frequencies of the uncoupled traps (frequency 1 used for free particles).
struct TrapModes {
    std::vector<double> masses;
    std::vector<double> omegas;
};

inline TrapModes trap_modes(const ModelSpec& spec) {
    auto w = [](double om) { return om > 0.0 ? om : 1.0; };
    switch (spec.kind) {
        case ModelKind::Ktm:
        case ModelKind::DissipativeKtm: {
            const auto& p = spec.ktm_params();
            return {{p.m1, p.m2}, {w(p.omega1), w(p.omega2)}};
        }
        case ModelKind::TdLinear: {
            const auto& p = spec.td_params();
            return {p.masses, std::vector<double>(p.size(), w(p.omega))};
        }
        case ModelKind::Caldeira: {
            const auto& p = spec.caldeira_params();
            return {{p.m1, p.m2}, {w(p.omega1), w(p.omega2)}};
        }
    }
    return {};
}

}  // namespace gravchannel
