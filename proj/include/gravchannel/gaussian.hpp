#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gravchannel/errors.hpp"
#include "gravchannel/generator.hpp"
#include "gravchannel/ode.hpp"
#include "gravchannel/units.hpp"

namespace gravchannel {

/// First moments and symmetrised covariance sigma_ij = 1/2 <{dr_i, dr_j}>.
struct GaussianState {
    Vec mean;
    Mat cov;

    Eigen::Index dim() const { return mean.size(); }
    Eigen::Index n_modes() const { return mean.size() / 2; }
};

/// Symplectic eigenvalues (ascending) of a covariance matrix.
inline Vec symplectic_eigenvalues(const Mat& cov) {
    const Eigen::Index n = cov.rows() / 2;
    const Mat omega = symplectic_form(n);
    Eigen::EigenSolver<Mat> es(omega * cov, false);
    std::vector<double> mags;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        mags.push_back(std::abs(es.eigenvalues()(i)));
    std::sort(mags.begin(), mags.end());
    Vec out(n);
    // eigenvalues come in +-i nu pairs
    for (Eigen::Index k = 0; k < n; ++k)
        out(k) = 0.5 * (mags[static_cast<std::size_t>(2 * k)] + mags[static_cast<std::size_t>(2 * k + 1)]);
    return out;
}

/// Smallest eigenvalue of cov + i hbar Omega / 2 (non-negative for a physical state).
inline double uncertainty_margin(const Mat& cov, double hbar) {
    const Eigen::Index n = cov.rows() / 2;
    Eigen::MatrixXcd m = cov.cast<std::complex<double>>();
    m += std::complex<double>(0.0, 0.5 * hbar) * symplectic_form(n).cast<std::complex<double>>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline double covariance_tolerance(const Mat& cov) {
    return 1e-9 * std::max(1.0, cov.norm());
}

/// Checks symmetry and the uncertainty relation; returns an empty string when valid.
inline std::string covariance_defect(const GaussianState& s, double hbar) {
    if (s.cov.rows() != s.dim() || s.cov.cols() != s.dim() || s.dim() % 2 != 0)
        return "covariance shape mismatch";
    if (!s.mean.allFinite() || !s.cov.allFinite()) return "non-finite moments";
    const double tol = covariance_tolerance(s.cov);
    if ((s.cov - s.cov.transpose()).cwiseAbs().maxCoeff() > tol) return "covariance not symmetric";
    const double margin = uncertainty_margin(s.cov, hbar);
    if (margin < -tol)
        return "uncertainty relation violated (min eigenvalue " + std::to_string(margin) + ")";
    return {};
}

inline GaussianState make_state(Vec mean, Mat cov, const UnitConstants& units) {
    GaussianState s{std::move(mean), std::move(cov)};
    const auto defect = covariance_defect(s, units.hbar);
    if (!defect.empty()) throw InvalidArgument("GaussianState: " + defect);
    return s;
}

/// Product of single-mode ground states of traps with the given masses and frequencies.
inline GaussianState vacuum_state(const std::vector<double>& masses,
                                  const std::vector<double>& omegas, const UnitConstants& units) {
    detail::require(masses.size() == omegas.size(), "vacuum_state: size mismatch");
    const auto n = static_cast<Eigen::Index>(masses.size());
    GaussianState s{Vec::Zero(2 * n), Mat::Zero(2 * n, 2 * n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        const double m = masses[static_cast<std::size_t>(k)];
        const double w = omegas[static_cast<std::size_t>(k)];
        detail::require(m > 0.0 && w > 0.0, "vacuum_state: mass and frequency must be > 0");
        s.cov(x_index(k), x_index(k)) = units.hbar / (2.0 * m * w);
        s.cov(p_index(k), p_index(k)) = units.hbar * m * w / 2.0;
    }
    return s;
}

struct MomentDerivative {
    Vec dmean;
    Mat dcov;
};

inline MomentDerivative moment_rhs(const QuadraticGenerator& gen, const GaussianState& s) {
    detail::require(s.dim() == gen.dim() && s.cov.rows() == gen.dim(),
                    "moment_rhs: state/generator shape mismatch");
    return {gen.drift * s.mean + gen.constant_drift,
            gen.drift * s.cov + s.cov * gen.drift.transpose() + gen.diffusion};
}

/// <H> = 1/2 tr(Hm sigma) + 1/2 mean^T Hm mean.
inline double energy(const GaussianState& s, const Mat& hm) {
    detail::require(hm.rows() == s.dim() && hm.cols() == s.dim(), "energy: shape mismatch");
    return 0.5 * (hm.cwiseProduct(s.cov).sum() + s.mean.dot(hm * s.mean));
}

/// Solves A X + X A^T + D = 0 through the Kronecker form (I (x) A + A (x) I) vec X = -vec D.
inline Mat solve_lyapunov(const Mat& a, const Mat& d) {
    const Eigen::Index n = a.rows();
    detail::require(a.cols() == n && d.rows() == n && d.cols() == n, "solve_lyapunov: shapes");
    const Mat id = Mat::Identity(n, n);
    Mat kron(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            kron.block(i * n, j * n, n, n) = a(i, j) * id + (i == j ? a : Mat::Zero(n, n));
    // column-major vec: vec(A X) = (I (x) A) vec X, vec(X A^T) = (A (x) I) vec X
    const Eigen::FullPivLU<Mat> lu(kron);
    if (!lu.isInvertible()) throw NotDissipative("Lyapunov operator is singular");
    const Vec rhs = -Eigen::Map<const Vec>(d.data(), n * n);
    Vec x = lu.solve(rhs);
    x += lu.solve(rhs - kron * x);  // one step of refinement
    Mat out = Eigen::Map<const Mat>(x.data(), n, n);
    return 0.5 * (out + out.transpose());
}

inline double lyapunov_residual(const Mat& a, const Mat& sigma, const Mat& d) {
    return (a * sigma + sigma * a.transpose() + d).norm();
}

/// Largest real part of the drift spectrum.
inline double spectral_abscissa(const Mat& a) {
    Eigen::EigenSolver<Mat> es(a, false);
    return es.eigenvalues().real().maxCoeff();
}

inline bool is_hurwitz(const Mat& a, double margin = 1e-12) {
    return spectral_abscissa(a) < -margin;
}

struct SteadyState {
    GaussianState state;
    double energy = 0.0;
    double residual = 0.0;
};

inline SteadyState steady_state(const QuadraticGenerator& gen) {
    const double abscissa = spectral_abscissa(gen.drift);
    if (!(abscissa < -1e-12))
        throw NotDissipative("drift is not Hurwitz (max Re lambda = " + std::to_string(abscissa) +
                             "); no steady state");
    SteadyState out;
    out.state.cov = solve_lyapunov(gen.drift, gen.diffusion);
    out.state.mean = gen.drift.fullPivLu().solve(-gen.constant_drift);
    out.energy = energy(out.state, gen.ham);
    out.residual = lyapunov_residual(gen.drift, out.state.cov, gen.diffusion);
    return out;
}

struct IntegrationOptions {
    ode::Options ode;
    double hbar = 1.0;
    bool check_validity = true;
};

/// Integrates the moment equations and returns the state at every point of t_grid
/// (t_grid[0] is the time of state0).
inline std::vector<GaussianState> integrate_moments(const QuadraticGenerator& gen,
                                                    const GaussianState& state0,
                                                    const std::vector<double>& t_grid,
                                                    const IntegrationOptions& opt = {},
                                                    ode::Stats* stats = nullptr) {
    const Eigen::Index n = gen.dim();
    detail::require(state0.dim() == n && state0.cov.rows() == n, "integrate_moments: shapes");
    detail::require(!t_grid.empty(), "integrate_moments: empty time grid");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        detail::require(t_grid[i] > t_grid[i - 1], "integrate_moments: t_grid must increase");

    Vec y(n + n * n);
    y.head(n) = state0.mean;
    y.tail(n * n) = Eigen::Map<const Vec>(state0.cov.data(), n * n);

    const Mat& a = gen.drift;
    const Mat& d = gen.diffusion;
    const Vec& b = gen.constant_drift;
    Mat sig(n, n), dsig(n, n);
    auto rhs = [&](double, const Vec& yy, Vec& dy) {
        dy.resize(yy.size());
        dy.head(n).noalias() = a * yy.head(n) + b;
        sig = Eigen::Map<const Mat>(yy.data() + n, n, n);
        dsig.noalias() = a * sig;
        dsig += dsig.transpose().eval();
        dsig += d;
        Eigen::Map<Mat>(dy.data() + n, n, n) = dsig;
    };

    auto unpack = [&](const Vec& yy, double t) {
        GaussianState s;
        s.mean = yy.head(n);
        Mat c = Eigen::Map<const Mat>(yy.data() + n, n, n);
        s.cov = 0.5 * (c + c.transpose());
        if (opt.check_validity) {
            const auto defect = covariance_defect(s, opt.hbar);
            if (!defect.empty())
                throw NumericalFailure("integrate_moments: invalid covariance at t = " +
                                       std::to_string(t) + ": " + defect);
        }
        return s;
    };

    std::vector<GaussianState> out;
    out.reserve(t_grid.size());
    out.push_back(unpack(y, t_grid.front()));
    double h = 0.0;
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        if (opt.ode.method == ode::Method::Rk4Fixed)
            ode::integrate_rk4(rhs, t_grid[i - 1], t_grid[i], y, opt.ode.dt, stats);
        else
            ode::integrate_dopri5(rhs, t_grid[i - 1], t_grid[i], y, h, opt.ode, stats);
        out.push_back(unpack(y, t_grid[i]));
    }
    return out;
}

/// Linear system obeyed by (V, T, C) = (1/2 M W^2 <x^2>, <p^2>/2M, <{p, x}>) of a single mode
/// with zero constant drift: d/dt (V, T, C) = L (V, T, C) + c.
struct EnergyMomentSystem {
    Eigen::Matrix3d L;
    Eigen::Vector3d c;
};

inline EnergyMomentSystem energy_moment_system(const QuadraticGenerator& gen, double M, double W2) {
    detail::require(gen.n_modes == 1, "energy_moment_system needs a single-mode generator");
    detail::require(M > 0.0 && W2 != 0.0, "energy_moment_system: M > 0 and W^2 != 0 required");
    const Mat& a = gen.drift;
    const Mat& d = gen.diffusion;
    EnergyMomentSystem s;
    s.L << 2.0 * a(0, 0), 0.0, 0.5 * M * W2 * a(0, 1),
           0.0, 2.0 * a(1, 1), a(1, 0) / (2.0 * M),
           4.0 * a(1, 0) / (M * W2), 4.0 * M * a(0, 1), a(0, 0) + a(1, 1);
    s.c << 0.5 * M * W2 * d(0, 0), d(1, 1) / (2.0 * M), 2.0 * d(0, 1);
    return s;
}

}  // namespace gravchannel
