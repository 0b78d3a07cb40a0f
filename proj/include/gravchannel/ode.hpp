#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

#include <Eigen/Dense>

#include "gravchannel/errors.hpp"

namespace gravchannel::ode {

enum class Method { Rk4Fixed, Rk45Adaptive };

struct Options {
    Method method = Method::Rk45Adaptive;
    double rtol = 1e-9;
    double atol = 1e-12;
    double dt = 1e-3;       // rk4_fixed step
    double max_step = 0.0;  // 0 = unbounded
    std::size_t max_steps = 50'000'000;
};

struct Stats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evals = 0;
};

namespace detail {

template <class Rhs>
void rk4_step(Rhs& rhs, double t, double h, Eigen::VectorXd& y, Eigen::VectorXd& k1,
              Eigen::VectorXd& k2, Eigen::VectorXd& k3, Eigen::VectorXd& k4,
              Eigen::VectorXd& tmp) {
    rhs(t, y, k1);
    tmp = y + 0.5 * h * k1;
    rhs(t + 0.5 * h, tmp, k2);
    tmp = y + 0.5 * h * k2;
    rhs(t + 0.5 * h, tmp, k3);
    tmp = y + h * k3;
    rhs(t + h, tmp, k4);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

/// Classical fourth-order Runge-Kutta from t0 to t1 with steps no larger than dt.
/// `rhs(t, y, dydt)` writes the derivative into its third argument.
template <class Rhs>
void integrate_rk4(Rhs&& rhs, double t0, double t1, Eigen::VectorXd& y, double dt,
                   Stats* stats = nullptr) {
    if (!(dt > 0.0)) throw InvalidArgument("rk4 step must be > 0");
    const double span = t1 - t0;
    if (span <= 0.0) return;
    const auto n_steps = static_cast<std::size_t>(std::ceil(span / dt - 1e-12));
    const double h = span / static_cast<double>(n_steps);
    Eigen::VectorXd k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size()), tmp(y.size());
    for (std::size_t s = 0; s < n_steps; ++s) {
        detail::rk4_step(rhs, t0 + static_cast<double>(s) * h, h, y, k1, k2, k3, k4, tmp);
    }
    if (stats) {
        stats->accepted += n_steps;
        stats->rhs_evals += 4 * n_steps;
    }
}

/// Dormand-Prince 5(4) with standard PI-free step control. Integrates y from t0 to t1
/// in place; `h` carries the step size between successive calls.
template <class Rhs>
void integrate_dopri5(Rhs&& rhs, double t0, double t1, Eigen::VectorXd& y, double& h,
                      const Options& opt, Stats* stats = nullptr) {
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                     b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double span = t1 - t0;
    if (span <= 0.0) return;
    const Eigen::Index n = y.size();
    Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n), err(n);

    double t = t0;
    if (!(h > 0.0)) h = std::min(span, 1e-3 * std::max(1.0, std::abs(span)));
    if (opt.max_step > 0.0) h = std::min(h, opt.max_step);

    rhs(t, y, k1);
    std::size_t steps = 0;
    while (t < t1) {
        if (++steps > opt.max_steps) throw NumericalFailure("dopri5: exceeded max_steps");
        bool last = false;
        double step = h;
        if (t + step >= t1) {
            step = t1 - t;
            last = true;
        }
        if (step < 1e-14 * std::max(1.0, std::abs(t)))
            throw NumericalFailure("dopri5: step size underflow");

        tmp = y + step * a21 * k1;
        rhs(t + c2 * step, tmp, k2);
        tmp = y + step * (a31 * k1 + a32 * k2);
        rhs(t + c3 * step, tmp, k3);
        tmp = y + step * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(t + c4 * step, tmp, k4);
        tmp = y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * step, tmp, k5);
        tmp = y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(t + step, tmp, k6);
        ynew = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        rhs(t + step, ynew, k7);
        err = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        if (stats) stats->rhs_evals += 6;

        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double sc = opt.atol + opt.rtol * std::max(std::abs(y(i)), std::abs(ynew(i)));
            const double r = err(i) / sc;
            acc += r * r;
        }
        const double enorm = std::sqrt(acc / static_cast<double>(n));
        if (!std::isfinite(enorm)) throw NumericalFailure("dopri5: non-finite error estimate");

        const double fac =
            enorm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(enorm, -0.2), 0.2, 5.0);
        if (enorm <= 1.0) {
            t = last ? t1 : t + step;
            y = ynew;
            k1 = k7;  // first-same-as-last
            if (stats) ++stats->accepted;
            // Keep the pre-clip step size for the next interval unless this step was limiting.
            if (!last || step == h) h = step * fac;
        } else {
            h = step * std::min(1.0, fac);
            if (stats) ++stats->rejected;
        }
        if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
    }
}

}  // namespace gravchannel::ode
