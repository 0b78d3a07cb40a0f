#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gravchannel/errors.hpp"
#include "gravchannel/units.hpp"

namespace gravchannel {

/// Two harmonically trapped masses coupled through position measurement and feedback.
/// Used for both the plain and the dissipative variant (alphas = 0 for the plain one).
struct KtmParams {
    double m1 = 1.0, m2 = 1.0;
    double omega1 = 1.0, omega2 = 1.0;
    double d = 1.0;
    double gamma1 = 0.0, gamma2 = 0.0;  // information gain rates, hbar^2 / (length^2 time)
    double alpha1 = 0.0, alpha2 = 0.0;  // dissipation lengths squared
    bool minimized_gamma = true;
    bool include_delta_h0 = false;
    /// Overrides K = 2 G m1 m2 / d^3 when set (synthetic O(1) couplings in tests and configs).
    std::optional<double> stiffness;

    void validate() const {
        detail::require(m1 > 0.0 && m2 > 0.0, "KTM masses must be > 0");
        detail::require(omega1 >= 0.0 && omega2 >= 0.0, "KTM trap frequencies must be >= 0");
        detail::require(d > 0.0, "KTM separation d must be > 0");
        detail::require(gamma1 >= 0.0 && gamma2 >= 0.0, "KTM gamma must be >= 0");
        detail::require(std::isfinite(alpha1) && std::isfinite(alpha2), "KTM alpha must be finite");
        if (stiffness) detail::require(*stiffness >= 0.0, "KTM stiffness must be >= 0");
    }

    bool dissipative() const { return alpha1 != 0.0 || alpha2 != 0.0; }
};

/// Linearised dissipative Tilloy-Diosi model: N point masses on a line around x0.
struct TdLinearParams {
    std::vector<double> masses{1.0, 1.0};
    std::vector<double> x0{0.0, 20.0};
    std::vector<double> alphas{0.0, 0.0};
    double R0 = 1.0;
    double omega = 1.0;

    std::size_t size() const { return masses.size(); }

    void validate() const {
        const std::size_t n = masses.size();
        detail::require(n >= 1, "TD model needs at least one particle");
        detail::require(x0.size() == n && alphas.size() == n,
                        "TD masses, x0 and alphas must have equal length");
        detail::require(R0 > 0.0, "TD smearing radius R0 must be > 0");
        detail::require(omega >= 0.0, "TD trap frequency must be >= 0");
        for (std::size_t k = 0; k < n; ++k) {
            detail::require(masses[k] > 0.0, "TD masses must be > 0");
            detail::require(std::isfinite(x0[k]) && std::isfinite(alphas[k]),
                            "TD positions and alphas must be finite");
            for (std::size_t j = 0; j < k; ++j)
                detail::require(x0[k] != x0[j], "TD particles must not coincide");
        }
    }

    /// Two identical particles at separation d.
    static TdLinearParams pair(double m, double d, double alpha, double R0, double omega) {
        return {{m, m}, {0.0, d}, {alpha, alpha}, R0, omega};
    }
};

/// Two-particle quantum Brownian motion reference model.
struct CaldeiraParams {
    double m1 = 1.0, m2 = 1.0;
    double omega1 = 1.0, omega2 = 1.0;
    double lambda1 = 0.0, lambda2 = 0.0;
    double T = 1.0;
    bool high_T = false;

    void validate() const {
        detail::require(m1 > 0.0 && m2 > 0.0, "Caldeira masses must be > 0");
        detail::require(lambda1 >= 0.0 && lambda2 >= 0.0, "Caldeira lambda must be >= 0");
        detail::require(T > 0.0, "Caldeira temperature must be > 0");
    }
};

enum class ModelKind { Ktm, DissipativeKtm, TdLinear, Caldeira };

inline std::string_view to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Ktm: return "ktm";
        case ModelKind::DissipativeKtm: return "dissipative_ktm";
        case ModelKind::TdLinear: return "td_linear";
        case ModelKind::Caldeira: return "caldeira";
    }
    return "unknown";
}

inline std::optional<ModelKind> model_kind_from_string(std::string_view s) {
    if (s == "ktm") return ModelKind::Ktm;
    if (s == "dissipative_ktm") return ModelKind::DissipativeKtm;
    if (s == "td_linear") return ModelKind::TdLinear;
    if (s == "caldeira") return ModelKind::Caldeira;
    return std::nullopt;
}

/// Tagged parameter set plus the unit constants it is expressed in.
struct ModelSpec {
    ModelKind kind = ModelKind::Ktm;
    std::variant<KtmParams, TdLinearParams, CaldeiraParams> params;
    UnitConstants units;

    static ModelSpec ktm(KtmParams p, UnitConstants u = {}) {
        return {ModelKind::Ktm, std::move(p), u};
    }
    static ModelSpec dissipative_ktm(KtmParams p, UnitConstants u = {}) {
        return {ModelKind::DissipativeKtm, std::move(p), u};
    }
    static ModelSpec td_linear(TdLinearParams p, UnitConstants u = {}) {
        return {ModelKind::TdLinear, std::move(p), u};
    }
    static ModelSpec caldeira(CaldeiraParams p, UnitConstants u = {}) {
        return {ModelKind::Caldeira, std::move(p), u};
    }

    const KtmParams& ktm_params() const { return std::get<KtmParams>(params); }
    const TdLinearParams& td_params() const { return std::get<TdLinearParams>(params); }
    const CaldeiraParams& caldeira_params() const { return std::get<CaldeiraParams>(params); }
    KtmParams& ktm_params() { return std::get<KtmParams>(params); }
    TdLinearParams& td_params() { return std::get<TdLinearParams>(params); }
    CaldeiraParams& caldeira_params() { return std::get<CaldeiraParams>(params); }

    bool is_ktm_family() const {
        return kind == ModelKind::Ktm || kind == ModelKind::DissipativeKtm;
    }

    void validate() const {
        units.validate();
        switch (kind) {
            case ModelKind::Ktm:
            case ModelKind::DissipativeKtm:
                detail::require(std::holds_alternative<KtmParams>(params), "model tag/params mismatch");
                ktm_params().validate();
                break;
            case ModelKind::TdLinear:
                detail::require(std::holds_alternative<TdLinearParams>(params), "model tag/params mismatch");
                td_params().validate();
                break;
            case ModelKind::Caldeira:
                detail::require(std::holds_alternative<CaldeiraParams>(params), "model tag/params mismatch");
                caldeira_params().validate();
                break;
        }
    }
};

}  // namespace gravchannel
