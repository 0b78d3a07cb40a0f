#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gravchannel/errors.hpp"
#include "gravchannel/gaussian.hpp"
#include "gravchannel/hilbert/fock.hpp"
#include "gravchannel/models.hpp"
#include "gravchannel/params.hpp"

namespace gravchannel::hilbert {

/// Density matrix on the product of two truncated number bases.
struct DenseState {
    CMat rho;
    int ncut = 0;
};

/// Superoperator written as d rho = Y + Y^dagger with
///   Y = K rho + sum_a w_a L_a rho R_a.
/// Every structure of the master equations (commutators, double commutators,
/// anticommutator terms, dissipators) splits into such a pair.
struct DenseModel {
    ModelSpec spec;
    TwoModeOperators ops;
    SpMat k_op;
    struct Jump {
        cplx w;
        int l, r;
    };
    std::vector<SpMat> table;  // operators referenced by jumps
    std::vector<Jump> jumps;
    SpMat energy_op;           // Hamiltonian whose expectation is reported
    double hbar = 1.0;

    Eigen::Index dim() const { return ops.dim(); }
};

namespace detail {

inline SpMat linear_op(const TwoModeOperators& ops, const Vec& u) {
    SpMat out(ops.dim(), ops.dim());
    for (int i = 0; i < 4; ++i)
        if (u(i) != 0.0) out += cplx(u(i)) * ops.r[i];
    return out;
}

inline SpMat quadratic_op(const TwoModeOperators& ops, const Mat& hm) {
    SpMat out(ops.dim(), ops.dim());
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (hm(i, j) != 0.0) out += cplx(0.5 * hm(i, j)) * SpMat(ops.r[i] * ops.r[j]);
    return out;
}

class ModelAssembler {
public:
    explicit ModelAssembler(DenseModel& m) : m_(m) {
        m_.k_op = SpMat(m.dim(), m.dim());
        for (int i = 0; i < 4; ++i) m_.table.push_back(m.ops.r[i]);
    }

    int add_op(const SpMat& op) {
        m_.table.push_back(op);
        return static_cast<int>(m_.table.size()) - 1;
    }

    int op_for(const Vec& u) {
        int hit = -1;
        for (int i = 0; i < 4; ++i) {
            if (u(i) == 0.0) continue;
            if (hit >= 0 || u(i) != 1.0) return add_op(linear_op(m_.ops, u));
            hit = i;
        }
        return hit >= 0 ? hit : add_op(linear_op(m_.ops, u));
    }

    void jump(cplx w, int l, int r) {
        for (auto& j : m_.jumps)
            if (j.l == l && j.r == r) {
                j.w += w;
                return;
            }
        m_.jumps.push_back({w, l, r});
    }

    // -(i/hbar) [H, rho]
    void hamiltonian(const SpMat& h) { m_.k_op += cplx(0.0, -1.0 / m_.hbar) * h; }

    // -c [U, [V, rho]]
    void double_commutator(double c, int u, int v) {
        m_.k_op += cplx(-c) * SpMat(m_.table[u] * m_.table[v]);
        jump(c, u, v);
    }

    // -i lam [U, {V, rho}]
    void anti_commutator(double lam, int u, int v) {
        m_.k_op += cplx(0.0, -lam) * SpMat(m_.table[u] * m_.table[v]);
        jump(cplx(0.0, -lam), u, v);
    }

    // -(i chi / 2 hbar) [B, A rho + rho A^dagger]
    void feedback_cross(double chi, int b, int a, int a_dag) {
        const cplx w(0.0, -chi / (2.0 * m_.hbar));
        m_.k_op += w * SpMat(m_.table[b] * m_.table[a]);
        jump(w, b, a_dag);
    }

    // (gamma / 4 hbar^2) (A rho A^dagger - 1/2 {A^dagger A, rho})
    void measurement(double gamma, int a, int a_dag) {
        const double c = gamma / (8.0 * m_.hbar * m_.hbar);
        m_.k_op += cplx(-c) * SpMat(m_.table[a_dag] * m_.table[a]);
        jump(c, a, a_dag);
    }

    void terms(const std::vector<LindbladTerm>& list) {
        for (const auto& t : list) {
            if (const auto* h = std::get_if<HamiltonianTerm>(&t)) {
                hamiltonian(quadratic_op(m_.ops, h->hm));
            } else if (const auto* dc = std::get_if<DoubleCommutatorTerm>(&t)) {
                double_commutator(dc->c, op_for(dc->u), op_for(dc->v));
            } else if (const auto* ac = std::get_if<AntiCommutatorTerm>(&t)) {
                anti_commutator(ac->lam, op_for(ac->u), op_for(ac->v));
            }
        }
    }

private:
    DenseModel& m_;
};

// Measurement of A_k = x_k + i alpha_k p_k / hbar with feedback H_fb = chi r_1 x_2 + chi r_2 x_1,
// chi = K, averaged over the noise.
inline void assemble_ktm_family(DenseModel& model, ModelAssembler& as) {
    const UnitConstants& u = model.spec.units;
    const KtmParams p = resolve_gammas(model.spec.ktm_params(), u);
    const double K = coupling_constant(p, u);
    const double hbar = u.hbar;
    const double masses[2] = {p.m1, p.m2};
    const double omegas[2] = {p.omega1, p.omega2};
    const double gammas[2] = {p.gamma1, p.gamma2};
    const double alphas[2] = {p.alpha1, p.alpha2};
    if (model.spec.kind == ModelKind::Ktm)
        gravchannel::detail::require(p.alpha1 == 0.0 && p.alpha2 == 0.0, "KTM model requires alpha = 0");

    const auto& ops = model.ops;
    SpMat h0(model.dim(), model.dim());
    int a_idx[2], ad_idx[2];
    for (int k = 0; k < 2; ++k) {
        const double big_omega2 = omegas[k] * omegas[k] - K / masses[k];
        h0 += cplx(0.5 / masses[k]) * SpMat(ops.p(k) * ops.p(k));
        h0 += cplx(0.5 * masses[k] * big_omega2) * SpMat(ops.x(k) * ops.x(k));
        const SpMat xp = ops.x(k) * ops.p(k);
        const SpMat anti = xp + SpMat(ops.p(k) * ops.x(k));
        // the dissipator of a non-Hermitian A_k generates -gamma alpha/(8 hbar^2) {x, p};
        // cancel it unless that shift is requested
        if (!p.include_delta_h0 && gammas[k] * alphas[k] != 0.0)
            h0 += cplx(gammas[k] * alphas[k] / (8.0 * hbar * hbar)) * anti;
        const SpMat a = ops.x(k) + cplx(0.0, alphas[k] / hbar) * ops.p(k);
        const SpMat ad = ops.x(k) + cplx(0.0, -alphas[k] / hbar) * ops.p(k);
        a_idx[k] = alphas[k] == 0.0 ? 2 * k : as.add_op(a);
        ad_idx[k] = alphas[k] == 0.0 ? 2 * k : as.add_op(ad);
    }
    as.hamiltonian(h0);

    for (int k = 0; k < 2; ++k) {
        const int j = 1 - k;
        const double chi = K;
        if (chi != 0.0) {
            if (gammas[k] == 0.0)
                throw InvalidArgument("gamma must be > 0 when K != 0 (feedback noise diverges)");
            as.double_commutator(chi * chi / (2.0 * gammas[k]), 2 * j, 2 * j);
            as.feedback_cross(chi, 2 * j, a_idx[k], ad_idx[k]);
        }
        if (gammas[k] != 0.0) as.measurement(gammas[k], a_idx[k], ad_idx[k]);
    }
}

}  // namespace detail

inline DenseModel make_dense_model(const ModelSpec& spec, int ncut) {
    spec.validate();
    DenseModel model;
    model.spec = spec;
    model.hbar = spec.units.hbar;
    const TrapModes traps = trap_modes(spec);
    gravchannel::detail::require(traps.masses.size() == 2, "dense engine supports two particles");
    const double masses[2] = {traps.masses[0], traps.masses[1]};
    const double omegas[2] = {traps.omegas[0], traps.omegas[1]};
    model.ops = two_mode_operators(ncut, masses, omegas, spec.units);

    detail::ModelAssembler as(model);
    switch (spec.kind) {
        case ModelKind::Ktm:
        case ModelKind::DissipativeKtm: detail::assemble_ktm_family(model, as); break;
        case ModelKind::Caldeira: as.terms(caldeira_terms(spec.caldeira_params(), spec.units)); break;
        case ModelKind::TdLinear: as.terms(td_linear_terms(spec.td_params(), spec.units)); break;
    }
    model.energy_op = detail::quadratic_op(model.ops, build_generator(spec).ham);
    return model;
}

namespace detail {

using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// o[0..n) += s * a[0..n), complex arithmetic spelled out in reals
inline void caxpy(Eigen::Index n, cplx s, const cplx* a, cplx* o) {
    const double sr = s.real(), si = s.imag();
    const double* x = reinterpret_cast<const double*>(a);
    double* y = reinterpret_cast<double*>(o);
    for (Eigen::Index i = 0; i < 2 * n; i += 2) {
        const double xr = x[i], xi = x[i + 1];
        y[i] += sr * xr - si * xi;
        y[i + 1] += sr * xi + si * xr;
    }
}

// out = op * m with m stored row-major: one contiguous row update per nonzero
inline void left_multiply(const SpMat& op, const RowMat& m, RowMat& out) {
    out.setZero(op.rows(), m.cols());
    for (Eigen::Index k = 0; k < op.outerSize(); ++k)
        for (SpMat::InnerIterator it(op, k); it; ++it)
            caxpy(m.cols(), it.value(), m.row(k).data(), out.row(it.row()).data());
}

// out += w * m * op, one contiguous column update per nonzero
inline void add_right_multiply(cplx w, const CMat& m, const SpMat& op, CMat& out) {
    for (Eigen::Index k = 0; k < op.outerSize(); ++k)
        for (SpMat::InnerIterator it(op, k); it; ++it)
            caxpy(m.rows(), w * it.value(), m.col(it.row()).data(), out.col(k).data());
}

}  // namespace detail

/// d rho / dt.
inline void dense_rhs(const DenseModel& model, const CMat& rho, CMat& out) {
    const detail::RowMat rows = rho;
    detail::RowMat left;
    detail::left_multiply(model.k_op, rows, left);
    out = left;
    CMat tmp;
    for (const auto& j : model.jumps) {
        detail::left_multiply(model.table[j.l], rows, left);
        tmp = left;
        detail::add_right_multiply(j.w, tmp, model.table[j.r], out);
    }
    tmp = out.adjoint();
    out += tmp;
}

inline CMat dense_rhs(const DenseModel& model, const CMat& rho) {
    CMat out;
    dense_rhs(model, rho, out);
    return out;
}

inline CMat pure_density(const CVec& psi) { return psi * psi.adjoint(); }

/// Vacuum of the basis traps.
inline DenseState dense_vacuum(const DenseModel& model) {
    return {pure_density(fock_state(model.ops.ncut, 0, 0)), model.ops.ncut};
}

inline double expect(const SpMat& op, const CMat& rho) {
    // tr(op rho)
    double acc = 0.0;
    for (Eigen::Index k = 0; k < op.outerSize(); ++k)
        for (SpMat::InnerIterator it(op, k); it; ++it)
            acc += (it.value() * rho(it.col(), it.row())).real();
    return acc;
}

/// Population of the two highest number states of each mode.
inline std::array<double, 2> top_level_population(const CMat& rho, int ncut) {
    std::array<double, 2> pop{0.0, 0.0};
    for (int n1 = 0; n1 < ncut; ++n1)
        for (int n2 = 0; n2 < ncut; ++n2) {
            const double w = rho(n1 * ncut + n2, n1 * ncut + n2).real();
            if (n1 >= ncut - 2) pop[0] += w;
            if (n2 >= ncut - 2) pop[1] += w;
        }
    return pop;
}

struct DenseDiagnostics {
    double hermiticity = 0.0;
    double trace_defect = 0.0;
    double min_eigenvalue = 0.0;
    double leakage = 0.0;
    double purity = 0.0;
};

inline DenseDiagnostics diagnose(const CMat& rho, int ncut, bool eigen = true) {
    DenseDiagnostics d;
    d.hermiticity = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    d.trace_defect = std::abs(rho.trace() - cplx(1.0));
    if (eigen) {
        const CMat herm = 0.5 * (rho + rho.adjoint());
        Eigen::SelfAdjointEigenSolver<CMat> es(herm, Eigen::EigenvaluesOnly);
        d.min_eigenvalue = es.eigenvalues().minCoeff();
    }
    const auto pop = top_level_population(rho, ncut);
    d.leakage = std::max(pop[0], pop[1]);
    d.purity = (rho * rho).trace().real();
    return d;
}

struct DenseLimits {
    double hermiticity = 1e-12;
    double trace = 1e-10;
    double positivity = 1e-8;
    double leakage = 1e-6;
};

inline std::string dense_defect(const DenseDiagnostics& d, const DenseLimits& lim = {}) {
    if (!(d.hermiticity <= lim.hermiticity)) return "density matrix lost hermiticity";
    if (!(d.trace_defect <= lim.trace)) return "trace drifted from 1";
    if (!(d.min_eigenvalue >= -lim.positivity)) return "density matrix lost positivity";
    if (!(d.leakage < lim.leakage))
        return "Fock truncation leakage " + std::to_string(d.leakage) + " exceeds guard";
    return {};
}

/// Moments of a dense state in the canonical ordering (x1, p1, x2, p2).
inline GaussianState dense_moments(const DenseModel& model, const CMat& rho) {
    GaussianState s{Vec(4), Mat(4, 4)};
    for (int i = 0; i < 4; ++i) s.mean(i) = expect(model.ops.r[i], rho);
    for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j) {
            const SpMat prod = model.ops.r[i] * model.ops.r[j];
            const SpMat sym = prod + SpMat(prod.adjoint());
            const double v = 0.5 * expect(sym, rho) - s.mean(i) * s.mean(j);
            s.cov(i, j) = s.cov(j, i) = v;
        }
    return s;
}

inline double dense_energy(const DenseModel& model, const CMat& rho) {
    return expect(model.energy_op, rho);
}

struct DenseOptions {
    double dt = 1e-2;
    DenseLimits limits;
    bool check = true;
};

/// RK4 integration of the dense master equation; invariants are enforced at every output time.
inline std::vector<DenseState> dense_integrate(const DenseModel& model, const DenseState& rho0,
                                               const std::vector<double>& t_grid,
                                               const DenseOptions& opt = {}) {
    gravchannel::detail::require(!t_grid.empty(), "dense_integrate: empty time grid");
    gravchannel::detail::require(opt.dt > 0.0, "dense_integrate: dt must be > 0");
    gravchannel::detail::require(rho0.rho.rows() == model.dim(), "dense_integrate: shape mismatch");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        gravchannel::detail::require(t_grid[i] > t_grid[i - 1], "dense_integrate: t_grid must increase");

    const Eigen::Index n = model.dim();
    CMat rho = rho0.rho, k1(n, n), k2(n, n), k3(n, n), k4(n, n), tmp(n, n);
    auto check = [&](double t) {
        if (!opt.check) return;
        const auto defect = dense_defect(diagnose(rho, model.ops.ncut), opt.limits);
        if (!defect.empty())
            throw NumericalFailure("dense_integrate at t = " + std::to_string(t) + ": " + defect);
    };
    std::vector<DenseState> out;
    out.reserve(t_grid.size());
    check(t_grid.front());
    out.push_back({rho, model.ops.ncut});
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        const double span = t_grid[i] - t_grid[i - 1];
        const auto steps = static_cast<std::size_t>(std::ceil(span / opt.dt - 1e-12));
        const double h = span / static_cast<double>(steps);
        for (std::size_t s = 0; s < steps; ++s) {
            dense_rhs(model, rho, k1);
            tmp = rho + 0.5 * h * k1;
            dense_rhs(model, tmp, k2);
            tmp = rho + 0.5 * h * k2;
            dense_rhs(model, tmp, k3);
            tmp = rho + h * k3;
            dense_rhs(model, tmp, k4);
            rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        check(t_grid[i]);
        out.push_back({rho, model.ops.ncut});
    }
    return out;
}

}  // namespace gravchannel::hilbert
