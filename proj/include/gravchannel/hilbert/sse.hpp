#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gravchannel/errors.hpp"
#include "gravchannel/hilbert/dense.hpp"
#include "gravchannel/hilbert/fock.hpp"
#include "gravchannel/models.hpp"
#include "gravchannel/parallel.hpp"

namespace gravchannel::hilbert {

/// Pure state of one measurement-feedback trajectory.
struct Trajectory {
    CVec psi;
    std::uint64_t rng_stream = 0;
    double t = 0.0;
};

/// Measurement record r_k = 1/2 <A_k + A_k^dagger> + hbar dW_k / (sqrt(gamma_k) dt) of one step.
struct MeasurementRecordSample {
    std::array<double, 2> r{0.0, 0.0};
};

/// Two-particle continuous measurement of A_k = x_k + i alpha_k p_k / hbar with feedback
/// H_fb = chi_1 r_1 x_2 + chi_2 r_2 x_1 (chi = K).
struct SseModel {
    int ncut = 0;
    double hbar = 1.0;
    double K = 0.0;
    std::array<double, 2> gamma{0.0, 0.0};
    std::array<double, 2> alpha{0.0, 0.0};
    TwoModeOperators ops;
    std::array<CMat, 2> h_local;  // single-mode parts of H0, exactly exponentiated
    std::array<SpMat, 2> a, ad_a;  // A_k and A_k^dagger A_k
    std::array<SpMat, 2> b, b2;    // B_j = x_j and B_j^2
    SpMat energy_op;

    // exp(-i h_k dt / hbar), cached for the last dt
    double cached_dt = -1.0;
    std::array<CMat, 2> unitary;

    // per-step workspace
    struct Work {
        std::array<CVec, 2> a_psi;
        CVec dpsi, centred, tmp, b_psi;
        CMat local;
    } work;

    void prepare(double dt) {
        if (dt == cached_dt) return;
        for (int k = 0; k < 2; ++k) {
            Eigen::SelfAdjointEigenSolver<CMat> es(h_local[k]);
            const auto& ev = es.eigenvalues();
            CVec phase(ev.size());
            for (Eigen::Index i = 0; i < ev.size(); ++i)
                phase(i) = std::exp(cplx(0.0, -ev(i) * dt / hbar));
            unitary[k] = es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
        }
        cached_dt = dt;
    }
};

inline SseModel make_sse_model(const ModelSpec& spec, int ncut) {
    spec.validate();
    if (!spec.is_ktm_family())
        throw InvalidArgument("the sse engine supports the ktm and dissipative_ktm models only");
    const UnitConstants& u = spec.units;
    const KtmParams p = resolve_gammas(spec.ktm_params(), u);
    if (spec.kind == ModelKind::Ktm)
        gravchannel::detail::require(p.alpha1 == 0.0 && p.alpha2 == 0.0, "KTM model requires alpha = 0");
    SseModel m;
    m.ncut = ncut;
    m.hbar = u.hbar;
    m.K = coupling_constant(p, u);
    m.gamma = {p.gamma1, p.gamma2};
    m.alpha = {p.alpha1, p.alpha2};
    const double masses[2] = {p.m1, p.m2};
    const double omegas[2] = {p.omega1, p.omega2};
    const TrapModes traps = trap_modes(spec);
    const double basis_w[2] = {traps.omegas[0], traps.omegas[1]};
    m.ops = two_mode_operators(ncut, masses, basis_w, u);
    if (m.K != 0.0)
        for (double g : m.gamma)
            if (g == 0.0) throw InvalidArgument("gamma must be > 0 when K != 0 (feedback noise diverges)");

    const double hbar = u.hbar;
    for (int k = 0; k < 2; ++k) {
        const auto& mo = m.ops.mode[k];
        const double big_omega2 = omegas[k] * omegas[k] - m.K / masses[k];
        CMat h = mo.p * mo.p / (2.0 * masses[k]) + 0.5 * masses[k] * big_omega2 * mo.x * mo.x;
        // cancels the -gamma alpha/(8 hbar^2) {x, p} generated by the non-Hermitian A_k
        if (!p.include_delta_h0)
            h += (m.gamma[k] * m.alpha[k] / (8.0 * hbar * hbar)) * (mo.x * mo.p + mo.p * mo.x);
        m.h_local[k] = 0.5 * (h + h.adjoint());
        m.a[k] = m.ops.x(k) + cplx(0.0, m.alpha[k] / hbar) * m.ops.p(k);
        m.ad_a[k] = SpMat(m.a[k].adjoint()) * m.a[k];
        m.b[k] = m.ops.x(k);
        m.b2[k] = m.ops.x(k) * m.ops.x(k);
    }
    m.energy_op = detail::quadratic_op(m.ops, build_generator(spec).ham);
    return m;
}

namespace detail {

// (U1 (x) U2) psi with psi indexed n1 * Ncut + n2.
inline void apply_local_unitary(SseModel& m, CVec& psi) {
    const int n = m.ncut;
    Eigen::Map<CMat> mat(psi.data(), n, n);  // mat(n2, n1)
    m.work.local.noalias() = m.unitary[1] * mat;
    mat.noalias() = m.work.local * m.unitary[0].transpose();
}

}  // namespace detail

/// One Euler-Maruyama step of the combined measurement, feedback and Ito terms following an
/// exact step of the local Hamiltonian; `noise` holds standard normal draws (dW = sqrt(dt) xi).
inline MeasurementRecordSample sse_step(Trajectory& traj, SseModel& m, double dt,
                                        const std::array<double, 2>& noise) {
    m.prepare(dt);
    detail::apply_local_unitary(m, traj.psi);
    const CVec& psi = traj.psi;
    const double hbar = m.hbar;
    const double sdt = std::sqrt(dt);
    auto& w = m.work;
    w.dpsi.setZero(psi.size());
    std::array<cplx, 2> a_mean;
    MeasurementRecordSample rec;

    for (int k = 0; k < 2; ++k) {
        detail::spmv(m.a[k], psi, w.a_psi[k]);
        a_mean[k] = psi.dot(w.a_psi[k]);
    }
    for (int k = 0; k < 2; ++k) {
        const double g = m.gamma[k];
        const double dw = sdt * noise[k];
        w.centred = w.a_psi[k] - a_mean[k] * psi;
        rec.r[k] = a_mean[k].real() + (g > 0.0 ? hbar * noise[k] / (std::sqrt(g) * sdt) : 0.0);
        if (g > 0.0) {
            // measurement
            detail::spmv(m.ad_a[k], psi, w.tmp);
            w.tmp += std::conj(a_mean[k]) * (a_mean[k] * psi - 2.0 * w.a_psi[k]);
            w.dpsi += (-g / (8.0 * hbar * hbar) * dt) * w.tmp;
            w.dpsi += (std::sqrt(g) / (2.0 * hbar) * dw) * w.centred;
        }
        const double chi = m.K;
        if (chi == 0.0) continue;
        const int j = 1 - k;
        // feedback from H_fb = chi r_k B_j, with the Ito correction -chi^2/(2 gamma) B_j^2 dt
        detail::spmv(m.b[j], psi, w.b_psi);
        w.dpsi += cplx(0.0, -chi / hbar * a_mean[k].real() * dt - chi / std::sqrt(g) * dw) * w.b_psi;
        detail::spmv(m.b2[j], psi, w.tmp);
        w.dpsi += (-chi * chi / (2.0 * g) * dt) * w.tmp;
        // cross term between measurement and feedback noise
        detail::spmv(m.b[j], w.centred, w.tmp);
        w.dpsi += cplx(0.0, -chi / (2.0 * hbar) * dt) * w.tmp;
    }
    traj.psi += w.dpsi;
    const double norm = traj.psi.norm();
    if (!(norm >= 0.5) || !std::isfinite(norm))
        throw NumericalFailure("sse_step: norm collapsed to " + std::to_string(norm) +
                               " (dt too large)");
    traj.psi /= norm;
    traj.t += dt;
    return rec;
}

/// Per-trajectory observables recorded at each output time.
enum SseObservable : int {
    kX1, kP1, kX2, kP2,
    // symmetrised raw second moments Re <r_i r_j>, upper triangle row by row
    kXX1, kX1P1, kX1X2, kX1P2, kPP1, kP1X2, kP1P2, kXX2, kX2P2, kPP2,
    kEnergy,
    kObservableCount
};

/// Observable index of Re <r_i r_j>.
inline int second_moment_index(int i, int j) {
    if (i > j) std::swap(i, j);
    static constexpr int row_start[4] = {kXX1, kPP1, kXX2, kPP2};
    return row_start[i] + (j - i);
}

inline std::array<double, kObservableCount> sse_observables(const SseModel& m, const CVec& psi) {
    std::array<double, kObservableCount> o{};
    std::array<CVec, 4> rp;
    for (int i = 0; i < 4; ++i) {
        detail::spmv(m.ops.r[i], psi, rp[i]);
        o[i] = psi.dot(rp[i]).real();
    }
    for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j) o[second_moment_index(i, j)] = rp[i].dot(rp[j]).real();
    CVec hpsi;
    detail::spmv(m.energy_op, psi, hpsi);
    o[kEnergy] = psi.dot(hpsi).real();
    return o;
}

struct EnsembleOptions {
    std::size_t n_traj = 1000;
    double dt = 1e-3;
    std::uint64_t master_seed = 0;
    unsigned threads = 0;  // 0 = worker_count()
    bool zero_noise = false;
};

/// Ensemble means and standard errors of every observable at every output time.
struct EnsembleStats {
    std::vector<double> t;
    std::vector<std::array<double, kObservableCount>> mean, stderr_;
    std::size_t n_traj = 0;

    /// Moments of the ensemble-averaged state at output i.
    GaussianState state(std::size_t i) const {
        const auto& o = mean[i];
        GaussianState s{Vec(4), Mat(4, 4)};
        for (int k = 0; k < 4; ++k) s.mean(k) = o[k];
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) s.cov(r, c) = o[second_moment_index(r, c)];
        s.cov -= s.mean * s.mean.transpose();
        return s;
    }
};

/// Runs n_traj independent trajectories from psi0. Trajectory i draws its noise from the
/// substream (master_seed, i); reductions use pairwise summation in trajectory order, so the
/// result does not depend on the thread count.
inline EnsembleStats ensemble_run(const SseModel& model, const CVec& psi0,
                                  const std::vector<double>& t_grid, const EnsembleOptions& opt) {
    gravchannel::detail::require(!t_grid.empty(), "ensemble_run: empty time grid");
    gravchannel::detail::require(opt.n_traj >= 1, "ensemble_run: need at least one trajectory");
    gravchannel::detail::require(opt.dt > 0.0, "ensemble_run: dt must be > 0");
    gravchannel::detail::require(psi0.size() == model.ops.dim(), "ensemble_run: state dimension");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        gravchannel::detail::require(t_grid[i] > t_grid[i - 1], "ensemble_run: t_grid must increase");

    const std::size_t n_out = t_grid.size();
    std::vector<std::array<double, kObservableCount>> samples(opt.n_traj * n_out);
    const CVec start = psi0 / psi0.norm();

    parallel_for(opt.n_traj, worker_count(opt.threads), [&](std::size_t i) {
        SseModel m = model;  // per-worker copy (unitary cache)
        Trajectory traj{start, substream_seed(opt.master_seed, i), t_grid.front()};
        std::mt19937_64 rng(traj.rng_stream);
        std::normal_distribution<double> normal(0.0, 1.0);
        samples[i * n_out] = sse_observables(m, traj.psi);
        for (std::size_t s = 1; s < n_out; ++s) {
            const double span = t_grid[s] - t_grid[s - 1];
            const auto steps = static_cast<std::size_t>(std::ceil(span / opt.dt - 1e-12));
            const double h = span / static_cast<double>(steps);
            for (std::size_t q = 0; q < steps; ++q) {
                std::array<double, 2> xi{0.0, 0.0};
                if (!opt.zero_noise) xi = {normal(rng), normal(rng)};
                sse_step(traj, m, h, xi);
            }
            samples[i * n_out + s] = sse_observables(m, traj.psi);
        }
    });

    EnsembleStats st;
    st.t = t_grid;
    st.n_traj = opt.n_traj;
    st.mean.resize(n_out);
    st.stderr_.resize(n_out);
    std::vector<double> col(opt.n_traj), dev(opt.n_traj);
    const double n = static_cast<double>(opt.n_traj);
    for (std::size_t s = 0; s < n_out; ++s)
        for (int o = 0; o < kObservableCount; ++o) {
            for (std::size_t i = 0; i < opt.n_traj; ++i) col[i] = samples[i * n_out + s][o];
            const double mu = pairwise_sum(col) / n;
            for (std::size_t i = 0; i < opt.n_traj; ++i) dev[i] = (col[i] - mu) * (col[i] - mu);
            const double var = opt.n_traj > 1 ? pairwise_sum(dev) / (n - 1.0) : 0.0;
            st.mean[s][o] = mu;
            st.stderr_[s][o] = std::sqrt(var / n);
        }
    return st;
}

}  // namespace gravchannel::hilbert
