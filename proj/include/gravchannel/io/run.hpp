#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gravchannel/analytics.hpp"
#include "gravchannel/eta.hpp"
#include "gravchannel/gaussian.hpp"
#include "gravchannel/hilbert/dense.hpp"
#include "gravchannel/hilbert/sse.hpp"
#include "gravchannel/io/config.hpp"
#include "gravchannel/models.hpp"
#include "gravchannel/parallel.hpp"

namespace gravchannel::io {

using ordered_json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kInvalidConfig = 1, kNumericalFailure = 2 };

inline constexpr const char* kTimeseriesHeader =
    "t,E_total,E_cm,E_rel,x1,p1,x2,p2,var_x1,var_p1,var_x2,var_p2,cov_x1x2";

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One line of the time-series table (columns of kTimeseriesHeader).
using Row = std::array<double, 13>;

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

/// JSON number, or null when not finite.
inline ordered_json number_or_null(double v) {
    return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

inline ordered_json describe_model(const ModelSpec& spec) {
    ordered_json j;
    j["kind"] = std::string(to_string(spec.kind));
    switch (spec.kind) {
        case ModelKind::Ktm:
        case ModelKind::DissipativeKtm: {
            const KtmParams p = resolve_gammas(spec.ktm_params(), spec.units);
            j["m"] = {p.m1, p.m2};
            j["omega"] = {p.omega1, p.omega2};
            j["d"] = p.d;
            j["K"] = coupling_constant(p, spec.units);
            j["gamma"] = {p.gamma1, p.gamma2};
            j["alpha"] = {p.alpha1, p.alpha2};
            j["minimized_gamma"] = p.minimized_gamma;
            j["include_delta_h0"] = p.include_delta_h0;
            break;
        }
        case ModelKind::TdLinear: {
            const auto& p = spec.td_params();
            j["masses"] = p.masses;
            j["x0"] = p.x0;
            j["alphas"] = p.alphas;
            j["R0"] = p.R0;
            j["omega"] = p.omega;
            break;
        }
        case ModelKind::Caldeira: {
            const auto& p = spec.caldeira_params();
            j["m"] = {p.m1, p.m2};
            j["omega"] = {p.omega1, p.omega2};
            j["lambda"] = {p.lambda1, p.lambda2};
            j["T"] = p.T;
            j["high_T"] = p.high_T;
            break;
        }
    }
    j["units"] = {{"hbar", spec.units.hbar}, {"G", spec.units.G}, {"kB", spec.units.kB}};
    return j;
}

/// Closed-form and Lyapunov predictions for a model.
struct Forecast {
    std::optional<double> growth_rate;
    std::optional<double> closed_form_asymptote;
    std::optional<double> lyapunov_energy;
    std::optional<double> t_eff;
    std::optional<EtaSet> eta;
};

inline std::optional<double> closed_form_growth(const ModelSpec& spec) {
    switch (spec.kind) {
        case ModelKind::Ktm:
        case ModelKind::DissipativeKtm:
            if (spec.ktm_params().dissipative()) return std::nullopt;
            return ktm_growth_rate(spec.ktm_params(), spec.units);
        case ModelKind::TdLinear: {
            const auto& p = spec.td_params();
            for (double a : p.alphas)
                if (a != 0.0) return std::nullopt;
            double rate = 0.0;
            for (double m : p.masses) rate += td_linear_injection_per_particle(m, p.R0, spec.units);
            return rate;
        }
        case ModelKind::Caldeira: return std::nullopt;
    }
    return std::nullopt;
}

inline std::optional<double> closed_form_asymptote(const ModelSpec& spec) {
    try {
        switch (spec.kind) {
            case ModelKind::Ktm:
            case ModelKind::DissipativeKtm:
                return ktm_asymptotic_energy(spec.ktm_params(), spec.units);
            case ModelKind::TdLinear: return td_asymptotic_energy(spec.td_params(), spec.units);
            case ModelKind::Caldeira:
                if (!spec.caldeira_params().high_T) return std::nullopt;
                return caldeira_asymptote(spec.caldeira_params().T, spec.units);
        }
    } catch (const InvalidArgument&) {
        // asymmetric parameters: no closed form
    }
    return std::nullopt;
}

inline std::optional<double> model_effective_temperature(const ModelSpec& spec) {
    if (!spec.is_ktm_family()) return std::nullopt;
    const KtmParams p = resolve_gammas(spec.ktm_params(), spec.units);
    if (p.m1 != p.m2 || p.alpha1 != p.alpha2 || p.gamma1 != p.gamma2 || !(p.alpha1 > 0.0))
        return std::nullopt;
    if (p.minimized_gamma)
        return effective_temperature(TemperatureMode::Minimized, p.m1, p.alpha1, 0.0, spec.units);
    if (p.stiffness || !(p.gamma1 > 0.0)) return std::nullopt;
    const double gamma0 = p.gamma1 * p.d * p.d * p.d;  // reference mass m0 = m
    return effective_temperature(TemperatureMode::General, p.m1, p.alpha1, gamma0, spec.units);
}

/// Predictions requested by `what`; a non-Hurwitz drift raises NotDissipative when an
/// asymptote is requested.
inline Forecast predict(const ModelSpec& spec, const QuadraticGenerator& gen, Prediction what) {
    Forecast out;
    if (spec.kind == ModelKind::TdLinear && spec.td_params().size() == 2) {
        const auto& p = spec.td_params();
        out.eta = eta_closed(p.R0, std::abs(p.x0[1] - p.x0[0]));
    }
    if (what == Prediction::Growth) {
        out.growth_rate = closed_form_growth(spec);
        if (!out.growth_rate)
            throw ConfigError("predict: growth needs a non-dissipative ktm or td_linear model");
    } else if (what == Prediction::Asymptote) {
        out.lyapunov_energy = steady_state(gen).energy;
        out.closed_form_asymptote = closed_form_asymptote(spec);
        out.t_eff = model_effective_temperature(spec);
    }
    return out;
}

namespace detail {

inline void fill_moment_columns(Row& row, const GaussianState& s, const Mat& ham) {
    const Eigen::Index n = s.dim();
    for (int i = 0; i < 4; ++i) row[4 + i] = i < n ? s.mean(i) : kNaN;
    for (int i = 0; i < 4; ++i) row[8 + i] = i < n ? s.cov(i, i) : kNaN;
    row[12] = n >= 4 ? s.cov(0, 2) : kNaN;
    row[2] = row[3] = kNaN;
    if (n != 4) return;
    const Mat h = com_rel::rows_tinv_t(com_rel::cols_tinv(ham));
    const double cross = std::max(h.topRightCorner(2, 2).cwiseAbs().maxCoeff(),
                                  h.bottomLeftCorner(2, 2).cwiseAbs().maxCoeff());
    if (cross > 1e-12 * std::max(1.0, h.cwiseAbs().maxCoeff())) return;
    const Mat cov = com_rel::congruence(s.cov);
    const Vec mu = com_rel::apply(s.mean);
    for (int b = 0; b < 2; ++b) {
        const auto hb = h.block(2 * b, 2 * b, 2, 2);
        const auto cb = cov.block(2 * b, 2 * b, 2, 2);
        const auto mb = mu.segment(2 * b, 2);
        row[2 + b] = 0.5 * (hb.cwiseProduct(cb).sum() + mb.dot(hb * mb));
    }
}

inline double fitted_slope(const std::vector<Row>& rows) {
    const double n = static_cast<double>(rows.size());
    double st = 0.0, se = 0.0;
    for (const auto& r : rows) {
        st += r[0];
        se += r[1];
    }
    const double tm = st / n, em = se / n;
    double num = 0.0, den = 0.0;
    for (const auto& r : rows) {
        num += (r[0] - tm) * (r[1] - em);
        den += (r[0] - tm) * (r[0] - tm);
    }
    return num / den;
}

inline double relative_deviation(double measured, double reference) {
    return std::abs(measured - reference) / std::abs(reference);
}

}  // namespace detail

struct SimulationResult {
    std::vector<Row> rows;
    ordered_json summary;
    double measured = kNaN;   // slope (growth) or terminal energy
    double deviation = kNaN;  // headline relative deviation
    Forecast prediction;
};

/// Runs the configured engine and assembles the time series and the summary in memory.
inline SimulationResult simulate(const ExperimentConfig& cfg) {
    const auto started = std::chrono::steady_clock::now();
    const ModelSpec& spec = cfg.model;
    const QuadraticGenerator gen = build_generator(spec);
    SimulationResult res;
    res.prediction = predict(spec, gen, cfg.predict);

    const auto t_grid = cfg.time_grid();
    const TrapModes traps = trap_modes(spec);
    GaussianState s0 = vacuum_state(traps.masses, traps.omegas, spec.units);
    if (!cfg.initial.vacuum)
        for (std::size_t k = 0; k < traps.masses.size(); ++k) {
            s0.mean(x_index(static_cast<Eigen::Index>(k))) = cfg.initial.x[k];
            s0.mean(p_index(static_cast<Eigen::Index>(k))) = cfg.initial.p[k];
        }

    auto initial_vector = [&](const hilbert::TwoModeOperators& ops) {
        if (cfg.initial.vacuum) return hilbert::fock_state(ops.ncut, 0, 0);
        hilbert::CVec modes[2];
        for (int k = 0; k < 2; ++k)
            modes[k] = hilbert::coherent_state(
                ops.ncut, hilbert::coherent_amplitude(cfg.initial.x[k], cfg.initial.p[k], ops.mode[k].m,
                                                      ops.mode[k].omega, spec.units));
        return hilbert::product_state(modes[0], modes[1]);
    };

    res.rows.resize(t_grid.size());
    switch (cfg.engine) {
        case Engine::Moments: {
            IntegrationOptions opt;
            opt.ode = cfg.integrator;
            opt.hbar = spec.units.hbar;
            const auto states = integrate_moments(gen, s0, t_grid, opt);
            for (std::size_t i = 0; i < states.size(); ++i) {
                Row& r = res.rows[i];
                r[0] = t_grid[i];
                r[1] = energy(states[i], gen.ham);
                detail::fill_moment_columns(r, states[i], gen.ham);
            }
            break;
        }
        case Engine::Dense: {
            const auto model = hilbert::make_dense_model(spec, cfg.ncut);
            hilbert::DenseOptions opt;
            opt.dt = cfg.dense_dt;
            const hilbert::DenseState rho0{hilbert::pure_density(initial_vector(model.ops)), cfg.ncut};
            const auto states = hilbert::dense_integrate(model, rho0, t_grid, opt);
            for (std::size_t i = 0; i < states.size(); ++i) {
                Row& r = res.rows[i];
                r[0] = t_grid[i];
                r[1] = hilbert::dense_energy(model, states[i].rho);
                detail::fill_moment_columns(r, hilbert::dense_moments(model, states[i].rho), gen.ham);
            }
            break;
        }
        case Engine::Sse: {
            const auto model = hilbert::make_sse_model(spec, cfg.ncut);
            hilbert::EnsembleOptions opt;
            opt.n_traj = cfg.n_traj;
            opt.dt = cfg.sse_dt;
            opt.master_seed = cfg.seed;
            opt.threads = cfg.threads;
            const auto st = hilbert::ensemble_run(model, initial_vector(model.ops), t_grid, opt);
            for (std::size_t i = 0; i < t_grid.size(); ++i) {
                Row& r = res.rows[i];
                r[0] = t_grid[i];
                r[1] = st.mean[i][hilbert::kEnergy];
                detail::fill_moment_columns(r, st.state(i), gen.ham);
            }
            break;
        }
    }

    ordered_json pred = ordered_json::object();
    const Forecast& p = res.prediction;
    if (cfg.predict == Prediction::Growth) {
        res.measured = detail::fitted_slope(res.rows);
        res.deviation = detail::relative_deviation(res.measured, *p.growth_rate);
        pred["growth_rate"] = *p.growth_rate;
    } else if (cfg.predict == Prediction::Asymptote) {
        res.measured = res.rows.back()[1];
        pred["lyapunov_energy"] = *p.lyapunov_energy;
        pred["closed_form_energy"] = p.closed_form_asymptote ? ordered_json(*p.closed_form_asymptote)
                                                             : ordered_json(nullptr);
        if (p.closed_form_asymptote)
            res.deviation = detail::relative_deviation(*p.lyapunov_energy, *p.closed_form_asymptote);
        pred["T_eff"] = p.t_eff ? ordered_json(*p.t_eff) : ordered_json(nullptr);
        pred["T_eff_from_lyapunov"] = *p.lyapunov_energy / (2.0 * spec.units.kB);
    }
    if (p.eta) pred["eta"] = {{"eta", p.eta->eta}, {"eta12", p.eta->eta12}};

    ordered_json& s = res.summary;
    s["model"] = describe_model(spec);
    s["engine"] = to_string(cfg.engine);
    s["t_max"] = cfg.t_max;
    s["n_outputs"] = cfg.n_outputs;
    if (cfg.engine != Engine::Moments) s["ncut"] = cfg.ncut;
    if (cfg.engine == Engine::Sse) {
        s["n_traj"] = cfg.n_traj;
        s["dt"] = cfg.sse_dt;
    }
    s["seed"] = cfg.seed;
    s["predict"] = to_string(cfg.predict);
    s["prediction"] = pred;
    if (cfg.predict == Prediction::Growth) {
        s["measured_slope"] = number_or_null(res.measured);
        s["deviation"] = number_or_null(res.deviation);
    } else if (cfg.predict == Prediction::Asymptote) {
        s["terminal_energy"] = number_or_null(res.measured);
        s["deviation"] = number_or_null(res.deviation);
        s["terminal_deviation"] =
            number_or_null(detail::relative_deviation(res.measured, *p.lyapunov_energy));
    }
    s["final_energy"] = number_or_null(res.rows.back()[1]);
    s["warnings"] = gen.warnings;
    if (cfg.output.include_runtime)
        s["runtime_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return res;
}

inline std::string timeseries_csv(const std::vector<Row>& rows) {
    std::string out = kTimeseriesHeader;
    out += '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i) out += ',';
            out += format_number(r[i]);
        }
        out += '\n';
    }
    return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write '" + path.string() + "'");
    f << content;
    if (!f) throw ConfigError("cannot write '" + path.string() + "'");
}

inline void write_outputs(const OutputSpec& out,
                          const std::vector<std::pair<std::string, std::string>>& files) {
    const std::filesystem::path dir(out.dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + out.dir + "': " + ec.message());
    for (const auto& [name, content] : files) write_file(dir / name, content);
}

/// Maps library exceptions onto exit codes, printing the message to `err`.
template <class Fn>
int guarded(Fn&& fn, std::ostream& err = std::cerr) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        err << "invalid config: " << e.what() << '\n';
        return kInvalidConfig;
    } catch (const InvalidArgument& e) {
        err << "invalid config: " << e.what() << '\n';
        return kInvalidConfig;
    } catch (const NotDissipative& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const NumericalFailure& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    }
}

/// simulate + write time series and summary. Nothing is written unless the run succeeds.
inline int run(const ExperimentConfig& cfg, std::ostream& err = std::cerr) {
    return guarded(
        [&] {
            const auto res = simulate(cfg);
            write_outputs(cfg.output, {{cfg.output.timeseries, timeseries_csv(res.rows)},
                                       {cfg.output.summary, res.summary.dump(2) + "\n"}});
            return int{kOk};
        },
        err);
}

inline constexpr const char* kSweepHeader =
    "parameter,value,status,growth_rate,closed_form_energy,lyapunov_energy,measured,deviation,"
    "T_eff,eta,eta12,eta12_point_mass";

/// One row per swept value; failures are recorded in the status column.
inline std::string sweep_table(const ExperimentConfig& cfg) {
    if (!cfg.sweep || cfg.sweep->values.empty()) throw ConfigError("sweep spec is empty");
    const auto& values = cfg.sweep->values;
    std::vector<std::string> lines(values.size());
    const unsigned workers = cfg.engine == Engine::Sse ? 1u : worker_count(cfg.threads);
    parallel_for(values.size(), workers, [&](std::size_t i) {
        ExperimentConfig point = cfg;
        point.sweep.reset();
        set_parameter(point.model, cfg.sweep->parameter, values[i]);
        std::vector<std::string> f{cfg.sweep->parameter, format_number(values[i]), "ok"};
        std::array<double, 9> num;
        num.fill(kNaN);
        try {
            point.model.validate();
            const auto res = simulate(point);
            const auto& p = res.prediction;
            if (p.growth_rate) num[0] = *p.growth_rate;
            if (p.closed_form_asymptote) num[1] = *p.closed_form_asymptote;
            if (p.lyapunov_energy) num[2] = *p.lyapunov_energy;
            num[3] = res.measured;
            num[4] = res.deviation;
            if (p.t_eff) num[5] = *p.t_eff;
            if (p.eta) {
                num[6] = p.eta->eta;
                num[7] = p.eta->eta12;
                const auto& td = point.model.td_params();
                const double d = std::abs(td.x0[1] - td.x0[0]);
                num[8] = -2.0 / (d * d * d);
            }
        } catch (const std::exception& e) {
            f[2] = std::string("error: ") + e.what();
        }
        std::string line = csv_field(f[0]) + ',' + f[1] + ',' + csv_field(f[2]);
        for (double v : num) line += ',' + format_number(v);
        lines[i] = line + '\n';
    });
    std::string out = kSweepHeader;
    out += '\n';
    for (const auto& l : lines) out += l;
    return out;
}

inline int sweep(const ExperimentConfig& cfg, std::ostream& err = std::cerr) {
    return guarded(
        [&] {
            const auto table = sweep_table(cfg);
            write_outputs(cfg.output, {{cfg.output.sweep, table}});
            return int{kOk};
        },
        err);
}

/// Closed-form and Lyapunov predictions as a JSON document (no time integration).
inline ordered_json asymptote_report(const ExperimentConfig& cfg) {
    const QuadraticGenerator gen = build_generator(cfg.model);
    const auto p = predict(cfg.model, gen, Prediction::Asymptote);
    ordered_json j;
    j["model"] = describe_model(cfg.model);
    j["lyapunov_energy"] = *p.lyapunov_energy;
    j["closed_form_energy"] =
        p.closed_form_asymptote ? ordered_json(*p.closed_form_asymptote) : ordered_json(nullptr);
    j["deviation"] = p.closed_form_asymptote
                         ? ordered_json(detail::relative_deviation(*p.lyapunov_energy, *p.closed_form_asymptote))
                         : ordered_json(nullptr);
    j["T_eff"] = p.t_eff ? ordered_json(*p.t_eff) : ordered_json(nullptr);
    j["T_eff_from_lyapunov"] = *p.lyapunov_energy / (2.0 * cfg.model.units.kB);
    j["warnings"] = gen.warnings;
    return j;
}

}  // namespace gravchannel::io
