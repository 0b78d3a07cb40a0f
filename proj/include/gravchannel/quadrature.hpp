#pragma once

#include <array>
#include <cmath>

#include "gravchannel/errors.hpp"

namespace gravchannel::quad {

struct Result {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1].
inline constexpr std::array<double, 8> kronrod_x = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kronrod_w = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gauss_w = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
void gk15(F& f, double a, double b, double& kronrod, double& err, double& abs_int) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double k = fc * kronrod_w[7];
    double g = fc * gauss_w[3];
    double ak = std::abs(fc) * kronrod_w[7];
    for (int i = 0; i < 7; ++i) {
        const double dx = h * kronrod_x[i];
        const double f1 = f(c - dx);
        const double f2 = f(c + dx);
        k += kronrod_w[i] * (f1 + f2);
        ak += kronrod_w[i] * (std::abs(f1) + std::abs(f2));
        if (i % 2 == 1) g += gauss_w[i / 2] * (f1 + f2);
    }
    kronrod = k * h;
    abs_int = ak * std::abs(h);
    err = std::abs((k - g) * h);
}

template <class F>
double adapt(F& f, double a, double b, double abs_tol, int depth, int max_depth, Result& res) {
    double k = 0.0, e = 0.0, ai = 0.0;
    gk15(f, a, b, k, e, ai);
    res.evaluations += 15;
    if (e <= abs_tol || (e <= 50.0 * 2.2e-16 * ai)) {
        res.error += e;
        return k;
    }
    if (depth >= max_depth) throw NumericalFailure("adaptive quadrature did not converge");
    const double m = 0.5 * (a + b);
    return adapt(f, a, m, 0.5 * abs_tol, depth + 1, max_depth, res) +
           adapt(f, m, b, 0.5 * abs_tol, depth + 1, max_depth, res);
}

}  // namespace detail

/// Globally adaptive (recursive bisection) Gauss-Kronrod G7/K15 integration of f on [a, b],
/// pre-split into `pieces` equal panels.
template <class F>
Result integrate(F&& f, double a, double b, double abs_tol, int pieces = 1, int max_depth = 40) {
    if (!(abs_tol > 0.0)) throw InvalidArgument("quadrature tolerance must be > 0");
    if (pieces < 1) pieces = 1;
    Result res;
    const double w = (b - a) / pieces;
    for (int i = 0; i < pieces; ++i) {
        const double lo = a + i * w;
        const double hi = (i + 1 == pieces) ? b : a + (i + 1) * w;
        res.value += detail::adapt(f, lo, hi, abs_tol / pieces, 0, max_depth, res);
    }
    return res;
}

}  // namespace gravchannel::quad
