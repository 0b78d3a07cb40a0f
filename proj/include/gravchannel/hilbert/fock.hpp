#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gravchannel/errors.hpp"
#include "gravchannel/units.hpp"

namespace gravchannel::hilbert {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using SpMat = Eigen::SparseMatrix<cplx>;

/// Single-mode operators in the number basis of a trap (m, omega), truncated to Ncut levels.
struct ModeOperators {
    int ncut = 0;
    double m = 1.0, omega = 1.0;
    CMat x, p, h0;  // h0 = p^2/2m + m omega^2 x^2 / 2 built from the truncated x and p
};

inline ModeOperators canonical_operators(int ncut, double m, double omega,
                                         const UnitConstants& units) {
    detail::require(ncut >= 4, "Fock cutoff must be >= 4");
    detail::require(m > 0.0 && omega > 0.0, "basis mass and frequency must be > 0");
    const double hbar = units.hbar;
    CMat a = CMat::Zero(ncut, ncut);
    for (int n = 1; n < ncut; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    const CMat ad = a.adjoint();
    ModeOperators op;
    op.ncut = ncut;
    op.m = m;
    op.omega = omega;
    op.x = std::sqrt(hbar / (2.0 * m * omega)) * (a + ad);
    op.p = cplx(0.0, std::sqrt(hbar * m * omega / 2.0)) * (ad - a);
    op.h0 = op.p * op.p / (2.0 * m) + 0.5 * m * omega * omega * op.x * op.x;
    return op;
}

inline SpMat to_sparse(const CMat& m, double drop = 0.0) {
    SpMat s(m.rows(), m.cols());
    std::vector<Eigen::Triplet<cplx>> trip;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (std::abs(m(i, j)) > drop) trip.emplace_back(i, j, m(i, j));
    s.setFromTriplets(trip.begin(), trip.end());
    return s;
}

/// Kronecker product of two single-mode matrices; basis index n1 * Ncut2 + n2.
inline SpMat kron(const CMat& a, const CMat& b) {
    std::vector<Eigen::Triplet<cplx>> trip;
    const Eigen::Index nb = b.rows();
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (a(i, j) == cplx(0.0)) continue;
            for (Eigen::Index k = 0; k < nb; ++k)
                for (Eigen::Index l = 0; l < b.cols(); ++l)
                    if (b(k, l) != cplx(0.0))
                        trip.emplace_back(i * nb + k, j * nb + l, a(i, j) * b(k, l));
        }
    SpMat s(a.rows() * nb, a.cols() * b.cols());
    s.setFromTriplets(trip.begin(), trip.end());
    return s;
}

namespace detail {

/// out = op * v with the complex products written out in reals.
inline void spmv(const SpMat& op, const CVec& v, CVec& out) {
    out.setZero(op.rows());
    double* y = reinterpret_cast<double*>(out.data());
    for (Eigen::Index k = 0; k < op.outerSize(); ++k) {
        const double vr = v[k].real(), vi = v[k].imag();
        if (vr == 0.0 && vi == 0.0) continue;
        for (SpMat::InnerIterator it(op, k); it; ++it) {
            const double sr = it.value().real(), si = it.value().imag();
            const Eigen::Index r = 2 * it.row();
            y[r] += sr * vr - si * vi;
            y[r + 1] += sr * vi + si * vr;
        }
    }
}

}  // namespace detail

/// Two-mode canonical operators embedded in the product space, ordered (x1, p1, x2, p2).
struct TwoModeOperators {
    int ncut = 0;
    ModeOperators mode[2];
    SpMat r[4];
    SpMat identity;

    Eigen::Index dim() const { return static_cast<Eigen::Index>(ncut) * ncut; }
    const SpMat& x(int k) const { return r[2 * k]; }
    const SpMat& p(int k) const { return r[2 * k + 1]; }
};

inline TwoModeOperators two_mode_operators(int ncut, const double masses[2], const double omegas[2],
                                           const UnitConstants& units) {
    TwoModeOperators t;
    t.ncut = ncut;
    const CMat id = CMat::Identity(ncut, ncut);
    for (int k = 0; k < 2; ++k) t.mode[k] = canonical_operators(ncut, masses[k], omegas[k], units);
    t.r[0] = kron(t.mode[0].x, id);
    t.r[1] = kron(t.mode[0].p, id);
    t.r[2] = kron(id, t.mode[1].x);
    t.r[3] = kron(id, t.mode[1].p);
    t.identity = kron(id, id);
    return t;
}

/// |n1, n2> in the product basis.
inline CVec fock_state(int ncut, int n1, int n2) {
    CVec v = CVec::Zero(static_cast<Eigen::Index>(ncut) * ncut);
    v(static_cast<Eigen::Index>(n1) * ncut + n2) = 1.0;
    return v;
}

/// Single-mode coherent state with amplitude beta, truncated and renormalised.
inline CVec coherent_state(int ncut, cplx beta) {
    CVec v(ncut);
    cplx c = 1.0;
    for (int n = 0; n < ncut; ++n) {
        if (n > 0) c *= beta / std::sqrt(static_cast<double>(n));
        v(n) = c;
    }
    return v / v.norm();
}

/// Coherent amplitude of a trap mode displaced to (x0, p0).
inline cplx coherent_amplitude(double x0, double p0, double m, double omega,
                               const UnitConstants& units) {
    const double hbar = units.hbar;
    return {x0 * std::sqrt(m * omega / (2.0 * hbar)), p0 / std::sqrt(2.0 * hbar * m * omega)};
}

inline CVec product_state(const CVec& a, const CVec& b) {
    CVec v(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) v.segment(i * b.size(), b.size()) = a(i) * b;
    return v;
}

}  // namespace gravchannel::hilbert
