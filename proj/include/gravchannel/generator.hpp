#pragma once

#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "gravchannel/errors.hpp"
#include "gravchannel/units.hpp"

namespace gravchannel {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Phase-space vector ordering is r = (x1, p1, x2, p2, ...), [r_i, r_j] = i hbar Omega_ij.

/// Block-diagonal symplectic form with [[0, 1], [-1, 0]] per mode.
inline Mat symplectic_form(Eigen::Index n_modes) {
    Mat omega = Mat::Zero(2 * n_modes, 2 * n_modes);
    for (Eigen::Index k = 0; k < n_modes; ++k) {
        omega(2 * k, 2 * k + 1) = 1.0;
        omega(2 * k + 1, 2 * k) = -1.0;
    }
    return omega;
}

inline Eigen::Index x_index(Eigen::Index mode) { return 2 * mode; }
inline Eigen::Index p_index(Eigen::Index mode) { return 2 * mode + 1; }

/// Unit coefficient vector selecting one canonical operator.
inline Vec unit_vector(Eigen::Index dim, Eigen::Index i) {
    Vec e = Vec::Zero(dim);
    e(i) = 1.0;
    return e;
}

/// Drift/diffusion form of a Gaussian-preserving master equation:
///   d<r>/dt = A <r> + b,   d sigma/dt = A sigma + sigma A^T + D,
/// together with the Hamiltonian H = 1/2 r^T Hm r whose energy is reported.
struct QuadraticGenerator {
    Eigen::Index n_modes = 0;
    Mat drift;
    Mat diffusion;
    Vec constant_drift;
    Mat ham;
    std::string provenance;
    std::vector<std::string> warnings;

    static QuadraticGenerator zero(Eigen::Index n_modes, std::string provenance = {}) {
        const Eigen::Index dim = 2 * n_modes;
        return {n_modes,       Mat::Zero(dim, dim), Mat::Zero(dim, dim), Vec::Zero(dim),
                Mat::Zero(dim, dim), std::move(provenance), {}};
    }

    Eigen::Index dim() const { return 2 * n_modes; }

    bool is_well_formed() const {
        const Eigen::Index n = dim();
        if (drift.rows() != n || drift.cols() != n) return false;
        if (diffusion.rows() != n || diffusion.cols() != n) return false;
        if (ham.rows() != n || ham.cols() != n || constant_drift.size() != n) return false;
        if (!drift.allFinite() || !diffusion.allFinite() || !constant_drift.allFinite() ||
            !ham.allFinite())
            return false;
        return diffusion == diffusion.transpose() && ham == ham.transpose();
    }
};

/// Hamiltonian term H = 1/2 r^T hm r.
struct HamiltonianTerm {
    Mat hm;
};

/// Term  -c [u.r, [v.r, rho]].
struct DoubleCommutatorTerm {
    double c = 0.0;
    Vec u, v;
};

/// Term  -i lam [u.r, {v.r, rho}].
struct AntiCommutatorTerm {
    double lam = 0.0;
    Vec u, v;
};

using LindbladTerm = std::variant<HamiltonianTerm, DoubleCommutatorTerm, AntiCommutatorTerm>;

inline DoubleCommutatorTerm double_commutator(double c, Eigen::Index dim, Eigen::Index i,
                                              Eigen::Index j) {
    return {c, unit_vector(dim, i), unit_vector(dim, j)};
}

inline AntiCommutatorTerm anti_commutator(double lam, Eigen::Index dim, Eigen::Index i,
                                          Eigen::Index j) {
    return {lam, unit_vector(dim, i), unit_vector(dim, j)};
}

/// Converts a list of quadratic master-equation terms into drift/diffusion form using the
/// canonical commutation relations. Hamiltonian terms are also accumulated into `ham`.
inline QuadraticGenerator lindblad_to_generator(const std::vector<LindbladTerm>& terms,
                                                Eigen::Index n_modes, const UnitConstants& units,
                                                std::string provenance = {}) {
    QuadraticGenerator gen = QuadraticGenerator::zero(n_modes, std::move(provenance));
    const Eigen::Index dim = gen.dim();
    const Mat omega = symplectic_form(n_modes);
    const double hbar = units.hbar;

    auto check_vec = [dim](const Vec& w) {
        if (w.size() != dim) throw InvalidArgument("Lindblad term vector has wrong dimension");
        if (!w.allFinite()) throw InvalidArgument("Lindblad term vector is not finite");
    };

    for (const auto& term : terms) {
        if (const auto* h = std::get_if<HamiltonianTerm>(&term)) {
            if (h->hm.rows() != dim || h->hm.cols() != dim)
                throw InvalidArgument("Hamiltonian term has wrong dimension");
            const Mat sym = 0.5 * (h->hm + h->hm.transpose());
            gen.ham += sym;
            gen.drift += omega * sym;
        } else if (const auto* dc = std::get_if<DoubleCommutatorTerm>(&term)) {
            check_vec(dc->u);
            check_vec(dc->v);
            const Vec ub = omega * dc->u;
            const Vec vb = omega * dc->v;
            gen.diffusion += dc->c * hbar * hbar * (ub * vb.transpose() + vb * ub.transpose());
        } else if (const auto* ac = std::get_if<AntiCommutatorTerm>(&term)) {
            check_vec(ac->u);
            check_vec(ac->v);
            const Vec ub = omega * ac->u;
            gen.drift += 2.0 * ac->lam * hbar * ub * ac->v.transpose();
        }
    }
    // Exact symmetry: the accumulated outer products are symmetric up to rounding order.
    gen.diffusion = 0.5 * (gen.diffusion + gen.diffusion.transpose()).eval();
    gen.ham = 0.5 * (gen.ham + gen.ham.transpose()).eval();
    return gen;
}

}  // namespace gravchannel
