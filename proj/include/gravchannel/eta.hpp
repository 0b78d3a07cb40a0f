#pragma once

#include <cmath>
#include <numbers>

#include "gravchannel/errors.hpp"
#include "gravchannel/quadrature.hpp"

namespace gravchannel {

/// Geometry weights of the linearised smeared-gravity master equation (1D component).
/// eta_plus and eta_minus are always assembled from eta and eta12.
struct EtaSet {
    double eta = 0.0;
    double eta12 = 0.0;
    double eta_plus = 0.0;
    double eta_minus = 0.0;

    static EtaSet from(double eta, double eta12) { return {eta, eta12, eta + eta12, eta - eta12}; }
};

/// Self term (6 sqrt(pi) R0^3)^-1.
inline double eta_self(double R0) {
    detail::require(R0 > 0.0, "R0 must be > 0");
    return 1.0 / (6.0 * std::sqrt(std::numbers::pi) * R0 * R0 * R0);
}

namespace detail {

// Taylor series in d/R0 of the pair coefficient; converges for all d but only used where the
// closed form suffers cancellation (d < R0).
inline double eta_pair_series(double R0, double d) {
    const double z2 = (d / R0) * (d / R0);
    // term_n = (-1)^n z^{2n} Gamma(n + 3/2) / ((2n)! (2n + 3))
    double g = 0.5 * std::sqrt(std::numbers::pi);  // Gamma(3/2) / 0!
    double zp = 1.0;
    double sum = 0.0;
    for (int n = 0; n < 60; ++n) {
        const double term = zp * g / (2.0 * n + 3.0);
        sum += (n % 2 == 0) ? term : -term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
        g *= (n + 1.5) / ((2.0 * n + 1.0) * (2.0 * n + 2.0));
        zp *= z2;
    }
    return sum / (std::numbers::pi * R0 * R0 * R0);
}

}  // namespace detail

/// Pair coefficient eta12 for two Gaussian-smeared masses at separation d.
inline double eta_pair(double R0, double d) {
    detail::require(R0 > 0.0, "R0 must be > 0");
    detail::require(d >= 0.0, "separation must be >= 0");
    if (d < R0) return detail::eta_pair_series(R0, d);
    const double sqrt_pi = std::sqrt(std::numbers::pi);
    const double d2 = d * d;
    const double gauss = std::exp(-d2 / (4.0 * R0 * R0)) * (4.0 * R0 * R0 + d2) /
                         (2.0 * sqrt_pi * R0 * R0 * R0 * d2);
    return gauss - 2.0 * std::erf(d / (2.0 * R0)) / (d2 * d);
}

/// Closed-form eta set for two particles at separation d.
inline EtaSet eta_closed(double R0, double d) {
    detail::require(d > 0.0, "separation d must be > 0");
    return EtaSet::from(eta_self(R0), eta_pair(R0, d));
}

namespace detail {

// Angular integral  int_{-1}^{1} u^2 exp(i s u) du  (real).
inline double angular_u2(double s) {
    const double a = std::abs(s);
    if (a < 0.5) {
        const double s2 = s * s;
        return 2.0 / 3.0 + s2 * (-1.0 / 5.0 + s2 * (1.0 / 84.0 + s2 * (-1.0 / 3240.0 +
                                  s2 * (1.0 / 221760.0 + s2 * (-1.0 / 23587200.0)))));
    }
    const double sn = std::sin(a), cs = std::cos(a);
    return 2.0 * sn / a + 4.0 * cs / (a * a) - 4.0 * sn / (a * a * a);
}

inline double eta_radial_quadrature(double R0, double d, double tol, double hbar) {
    // eta_kj = 1/(pi hbar^3) int_0^inf q^2 exp(-q^2 R0^2 / hbar^2) angular_u2(q d / hbar) dq
    const double q_max = 9.0 * hbar / R0;
    auto integrand = [&](double q) {
        const double k = q / hbar;
        return q * q * std::exp(-k * k * R0 * R0) * angular_u2(k * d);
    };
    const double scale = eta_self(R0);  // eta_self is hbar independent
    const double abs_tol = 1e-3 * tol * scale * std::numbers::pi * hbar * hbar * hbar;
    const int pieces = 8 + static_cast<int>(q_max * d / hbar / std::numbers::pi);
    const auto res = quad::integrate(integrand, 0.0, q_max, abs_tol, pieces);
    return res.value / (std::numbers::pi * hbar * hbar * hbar);
}

}  // namespace detail

/// Eta set by direct adaptive quadrature of the momentum-space integral with the angular
/// part done analytically. Independent of the closed form; d = 0 yields eta12 = eta.
inline EtaSet eta_quadrature(double R0, double d, double tol = 1e-10, double hbar = 1.0) {
    detail::require(R0 > 0.0, "R0 must be > 0");
    detail::require(d >= 0.0, "separation must be >= 0");
    detail::require(tol >= 1e-10, "quadrature tolerance must be >= 1e-10");
    detail::require(hbar > 0.0, "hbar must be > 0");
    const double self = detail::eta_radial_quadrature(R0, 0.0, tol, hbar);
    const double pair = d == 0.0 ? self : detail::eta_radial_quadrature(R0, d, tol, hbar);
    return EtaSet::from(self, pair);
}

}  // namespace gravchannel
