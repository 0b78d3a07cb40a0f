#pragma once

#include <cmath>
#include <numbers>

#include "gravchannel/errors.hpp"
#include "gravchannel/eta.hpp"
#include "gravchannel/models.hpp"
#include "gravchannel/params.hpp"
#include "gravchannel/units.hpp"

namespace gravchannel {

/// Which terms of an asymptotic-energy formula are kept.
enum class Regime {
    Full,
    SmallAlpha,  // leading 1/alpha terms only
};

/// Rate of linear energy growth of the KTM model: sum_k hbar^2 c_k / m_k with c_k the position
/// diffusion coefficient; hbar K / m for equal masses and minimised gamma.
inline double ktm_growth_rate(const KtmParams& raw, const UnitConstants& units) {
    raw.validate();
    const KtmParams p = resolve_gammas(raw, units);
    const double K = coupling_constant(p, units);
    const double h2 = units.hbar * units.hbar;
    const double c1 = detail::ktm_position_diffusion(p, K, p.gamma1, p.gamma2, units);
    const double c2 = detail::ktm_position_diffusion(p, K, p.gamma2, p.gamma1, units);
    return h2 * (c1 / p.m1 + c2 / p.m2);
}

/// Energy growth rate of the (non-dissipative) TD model: hbar G sum(m) / (4 sqrt(pi) R0^3).
inline double td_growth_rate(const std::vector<double>& masses, double R0,
                             const UnitConstants& units) {
    detail::require(R0 > 0.0, "R0 must be > 0");
    double total = 0.0;
    for (double m : masses) {
        detail::require(m > 0.0, "masses must be > 0");
        total += m;
    }
    return units.hbar * units.G * total / (4.0 * std::sqrt(std::numbers::pi) * R0 * R0 * R0);
}

/// Kinetic-energy injection per particle of the one-dimensional linearised TD model,
/// G m hbar eta / 2 = G m hbar / (12 sqrt(pi) R0^3).
inline double td_linear_injection_per_particle(double m, double R0, const UnitConstants& units) {
    detail::require(m > 0.0 && R0 > 0.0, "m and R0 must be > 0");
    return 0.5 * units.G * m * units.hbar * eta_self(R0);
}

namespace detail {

struct SymmetricKtm {
    double m, omega, alpha, gamma, K;
};

inline SymmetricKtm symmetric_ktm(const KtmParams& raw, const UnitConstants& units) {
    raw.validate();
    const KtmParams p = resolve_gammas(raw, units);
    require(p.m1 == p.m2 && p.omega1 == p.omega2 && p.alpha1 == p.alpha2 && p.gamma1 == p.gamma2,
            "closed-form asymptote needs identical particles");
    if (!(p.alpha1 > 0.0)) throw NotDissipative("asymptotic energy requires alpha > 0");
    return {p.m1, p.omega1, p.alpha1, p.gamma1, coupling_constant(p, units)};
}

}  // namespace detail

/// <H>_inf = hbar^2/(m alpha) + alpha m Omega^2 / 2 + K^2 alpha^3 m / (4 hbar^2),
/// Omega^2 = omega^2 - K/m (minimised gamma).
inline double ktm_asymptote_minimized(double m, double omega, double alpha, double K,
                                      const UnitConstants& units, Regime regime = Regime::Full) {
    if (!(alpha > 0.0)) throw NotDissipative("asymptotic energy requires alpha > 0");
    const double h2 = units.hbar * units.hbar;
    const double lead = h2 / (m * alpha);
    if (regime == Regime::SmallAlpha) return lead;
    const double big_omega2 = omega * omega - K / m;
    return lead + 0.5 * alpha * m * big_omega2 + K * K * alpha * alpha * alpha * m / (4.0 * h2);
}

/// Same quantity with the constants explicit (K = 2 G m^2 / d^3).
inline double ktm_asymptote_explicit(double m, double omega, double alpha, double d,
                                     const UnitConstants& units) {
    if (!(alpha > 0.0)) throw NotDissipative("asymptotic energy requires alpha > 0");
    const double h2 = units.hbar * units.hbar;
    const double G = units.G;
    const double d3 = d * d * d;
    return h2 / (m * alpha) + 0.5 * alpha * m * omega * omega - alpha * m * m * G / d3 +
           G * G * alpha * alpha * alpha * std::pow(m, 5) / (h2 * d3 * d3);
}

/// General gamma:
/// hbar^2/(2 m alpha) + 2 hbar^4 K^2/(m alpha gamma^2) + alpha m omega^2/2 - alpha K/2
///   + m alpha^3 gamma^2 / (16 hbar^4).
inline double ktm_asymptote_general(double m, double omega, double alpha, double gamma, double K,
                                    const UnitConstants& units, Regime regime = Regime::Full) {
    if (!(alpha > 0.0)) throw NotDissipative("asymptotic energy requires alpha > 0");
    detail::require(gamma > 0.0, "general-gamma asymptote requires gamma > 0");
    const double h2 = units.hbar * units.hbar;
    const double lead = h2 / (2.0 * m * alpha) + 2.0 * h2 * h2 * K * K / (m * alpha * gamma * gamma);
    if (regime == Regime::SmallAlpha) return lead;
    return lead + 0.5 * alpha * m * omega * omega - 0.5 * alpha * K +
           m * alpha * alpha * alpha * gamma * gamma / (16.0 * h2 * h2);
}

/// General-gamma asymptote with the constants explicit.
inline double ktm_asymptote_general_explicit(double m, double omega, double alpha, double gamma,
                                             double d, const UnitConstants& units) {
    if (!(alpha > 0.0)) throw NotDissipative("asymptotic energy requires alpha > 0");
    detail::require(gamma > 0.0, "general-gamma asymptote requires gamma > 0");
    const double h2 = units.hbar * units.hbar;
    const double G = units.G;
    const double d3 = d * d * d;
    return h2 / (2.0 * m * alpha) + 8.0 * h2 * h2 * G * G * m * m * m / (gamma * gamma * alpha * d3 * d3) +
           0.5 * alpha * m * omega * omega - alpha * m * m * G / d3 +
           m * alpha * alpha * alpha * gamma * gamma / (16.0 * h2 * h2);
}

/// Asymptotic energy of the dissipative KTM model for identical particles.
inline double ktm_asymptotic_energy(const KtmParams& p, const UnitConstants& units,
                                    Regime regime = Regime::Full) {
    const auto s = detail::symmetric_ktm(p, units);
    if (p.minimized_gamma) return ktm_asymptote_minimized(s.m, s.omega, s.alpha, s.K, units, regime);
    return ktm_asymptote_general(s.m, s.omega, s.alpha, s.gamma, s.K, units, regime);
}

/// Asymptotic energy of the linearised dissipative TD model for two identical particles:
/// hbar^2/(m alpha) + alpha m omega^2/2 - alpha m^2 G eta_-/2 + G^2 alpha^3 m^5 (eta^2 + eta12^2)/(4 hbar^2).
inline double td_asymptote(double m, double omega, double alpha, const EtaSet& eta,
                           const UnitConstants& units) {
    if (!(alpha > 0.0)) throw NotDissipative("asymptotic energy requires alpha > 0");
    const double h2 = units.hbar * units.hbar;
    const double G = units.G;
    return h2 / (m * alpha) + 0.5 * alpha * m * omega * omega - 0.5 * alpha * m * m * G * eta.eta_minus +
           G * G * alpha * alpha * alpha * std::pow(m, 5) *
               (eta.eta * eta.eta + eta.eta12 * eta.eta12) / (4.0 * h2);
}

inline double td_asymptotic_energy(const TdLinearParams& p, const UnitConstants& units) {
    p.validate();
    detail::require(p.size() == 2, "TD asymptote is defined for two particles");
    detail::require(p.masses[0] == p.masses[1] && p.alphas[0] == p.alphas[1],
                    "TD asymptote needs identical particles");
    return td_asymptote(p.masses[0], p.omega, p.alphas[0],
                        eta_closed(p.R0, std::abs(p.x0[1] - p.x0[0])), units);
}

enum class TemperatureMode {
    Minimized,
    General,
    GeneralHalfFeedback,  // feedback term 2 hbar^2 G^2 m0^3 / (gamma0^2 alpha0 kB)
};

/// Effective temperature of the dissipative KTM bath in the small-alpha regime with
/// alpha = m0 alpha0 / m (and gamma = m^2 gamma0 / (m0^2 d^3) in the general modes):
///   Minimized:            hbar^2 / (2 m0 alpha0 kB)
///   General:              hbar^2 / (4 m0 alpha0 kB) + 4 hbar^4 G^2 m0^3 / (gamma0^2 alpha0 kB)
///   GeneralHalfFeedback:  hbar^2 / (4 m0 alpha0 kB) + 2 hbar^2 G^2 m0^3 / (gamma0^2 alpha0 kB)
/// Only Minimized and General equal half the small-alpha asymptotic energy over kB.
inline double effective_temperature(TemperatureMode mode, double m0, double alpha0, double gamma0,
                                    const UnitConstants& units) {
    detail::require(m0 > 0.0 && alpha0 > 0.0, "m0 and alpha0 must be > 0");
    const double h2 = units.hbar * units.hbar;
    if (mode == TemperatureMode::Minimized) return h2 / (2.0 * m0 * alpha0 * units.kB);
    detail::require(gamma0 > 0.0, "gamma0 must be > 0 in general mode");
    const double measurement = h2 / (4.0 * m0 * alpha0 * units.kB);
    if (std::isinf(gamma0)) return measurement;
    const double G = units.G;
    const double coeff = mode == TemperatureMode::General ? 4.0 * h2 * h2 : 2.0 * h2;
    return measurement + coeff * G * G * m0 * m0 * m0 / (gamma0 * gamma0 * alpha0 * units.kB);
}

/// alpha = m0 alpha0 / m.
inline double alpha_from_reference(double m0, double alpha0, double m) { return m0 * alpha0 / m; }

/// gamma = m^2 gamma0 / (m0^2 d^3).
inline double gamma_from_reference(double m0, double gamma0, double m, double d) {
    return m * m * gamma0 / (m0 * m0 * d * d * d);
}

/// Equipartition value 2 kB T of two trapped particles in a high-temperature bath.
inline double caldeira_asymptote(double T, const UnitConstants& units) {
    detail::require(T >= 0.0, "temperature must be >= 0");
    return 2.0 * units.kB * T;
}

/// Stiffness of the KTM model equivalent to a TD pair at separation d: 2 G m^2 / d^3.
inline double ktm_equivalent_stiffness(double m, double d, const UnitConstants& units) {
    return 2.0 * units.G * m * m / (d * d * d);
}

}  // namespace gravchannel
