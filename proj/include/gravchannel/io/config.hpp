#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gravchannel/errors.hpp"
#include "gravchannel/gaussian.hpp"
#include "gravchannel/ode.hpp"
#include "gravchannel/params.hpp"
#include "gravchannel/units.hpp"

namespace gravchannel::io {

using json = nlohmann::json;

/// Raised for anything wrong with a configuration document (exit code 1).
class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

enum class Engine { Moments, Dense, Sse };
enum class Prediction { None, Growth, Asymptote };

inline const char* to_string(Engine e) {
    switch (e) {
        case Engine::Moments: return "moments";
        case Engine::Dense: return "dense";
        case Engine::Sse: return "sse";
    }
    return "?";
}

inline const char* to_string(Prediction p) {
    switch (p) {
        case Prediction::None: return "none";
        case Prediction::Growth: return "growth";
        case Prediction::Asymptote: return "asymptote";
    }
    return "?";
}

struct InitialState {
    bool vacuum = true;
    std::vector<double> x, p;  // displacement of each particle (coherent state)
};

struct SweepSpec {
    std::string parameter;
    std::vector<double> values;
};

struct OutputSpec {
    std::string dir = "out";
    std::string timeseries = "timeseries.csv";
    std::string summary = "summary.json";
    std::string sweep = "sweep.csv";
    bool include_runtime = false;
};

struct ExperimentConfig {
    ModelSpec model;
    json model_echo;
    Engine engine = Engine::Moments;
    double t_max = 10.0;
    std::size_t n_outputs = 101;
    ode::Options integrator;
    int ncut = 12;
    double dense_dt = 1e-2;
    std::size_t n_traj = 2000;
    double sse_dt = 1e-3;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    InitialState initial;
    Prediction predict = Prediction::None;
    std::optional<SweepSpec> sweep;
    OutputSpec output;

    std::vector<double> time_grid() const {
        std::vector<double> t(n_outputs);
        for (std::size_t i = 0; i < n_outputs; ++i)
            t[i] = t_max * static_cast<double>(i) / static_cast<double>(n_outputs - 1);
        return t;
    }
};

namespace detail {

inline void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

inline double number(const json& v, const std::string& name) {
    if (!v.is_number()) throw ConfigError("'" + name + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError("'" + name + "' must be finite");
    return x;
}

inline bool boolean(const json& v, const std::string& name) {
    if (!v.is_boolean()) throw ConfigError("'" + name + "' must be true or false");
    return v.get<bool>();
}

inline std::uint64_t unsigned_integer(const json& v, const std::string& name) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ConfigError("'" + name + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

inline std::vector<double> number_list(const json& v, const std::string& name) {
    if (!v.is_array()) throw ConfigError("'" + name + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(number(e, name));
    return out;
}

inline std::string text(const json& v, const std::string& name) {
    if (!v.is_string()) throw ConfigError("'" + name + "' must be a string");
    return v.get<std::string>();
}

}  // namespace detail

/// Names accepted by set_parameter for each model kind.
inline std::set<std::string> scalar_parameters(ModelKind kind) {
    switch (kind) {
        case ModelKind::Ktm:
        case ModelKind::DissipativeKtm:
            return {"m", "m1", "m2", "omega", "omega1", "omega2", "d", "gamma", "gamma1",
                    "gamma2", "alpha", "alpha1", "alpha2", "K"};
        case ModelKind::TdLinear: return {"m", "d", "alpha", "R0", "omega"};
        case ModelKind::Caldeira:
            return {"m", "m1", "m2", "omega", "omega1", "omega2", "lambda", "lambda1", "lambda2", "T"};
    }
    return {};
}

/// Sets one scalar model parameter by name (also used by sweeps).
inline void set_parameter(ModelSpec& spec, const std::string& name, double v) {
    if (!scalar_parameters(spec.kind).count(name))
        throw ConfigError("parameter '" + name + "' is not defined for model '" +
                          std::string(to_string(spec.kind)) + "'");
    switch (spec.kind) {
        case ModelKind::Ktm:
        case ModelKind::DissipativeKtm: {
            auto& p = spec.ktm_params();
            if (name == "m") p.m1 = p.m2 = v;
            else if (name == "m1") p.m1 = v;
            else if (name == "m2") p.m2 = v;
            else if (name == "omega") p.omega1 = p.omega2 = v;
            else if (name == "omega1") p.omega1 = v;
            else if (name == "omega2") p.omega2 = v;
            else if (name == "d") p.d = v;
            else if (name == "gamma") p.gamma1 = p.gamma2 = v;
            else if (name == "gamma1") p.gamma1 = v;
            else if (name == "gamma2") p.gamma2 = v;
            else if (name == "alpha") p.alpha1 = p.alpha2 = v;
            else if (name == "alpha1") p.alpha1 = v;
            else if (name == "alpha2") p.alpha2 = v;
            else if (name == "K") p.stiffness = v;
            if (name.rfind("gamma", 0) == 0 && p.minimized_gamma)
                throw ConfigError("'" + name + "' requires minimized_gamma = false");
            break;
        }
        case ModelKind::TdLinear: {
            auto& p = spec.td_params();
            if (name == "m") p.masses.assign(p.size(), v);
            else if (name == "alpha") p.alphas.assign(p.size(), v);
            else if (name == "R0") p.R0 = v;
            else if (name == "omega") p.omega = v;
            else if (name == "d") {
                if (p.size() != 2) throw ConfigError("'d' is only defined for two particles");
                p.x0 = {0.0, v};
            }
            break;
        }
        case ModelKind::Caldeira: {
            auto& p = spec.caldeira_params();
            if (name == "m") p.m1 = p.m2 = v;
            else if (name == "m1") p.m1 = v;
            else if (name == "m2") p.m2 = v;
            else if (name == "omega") p.omega1 = p.omega2 = v;
            else if (name == "omega1") p.omega1 = v;
            else if (name == "omega2") p.omega2 = v;
            else if (name == "lambda") p.lambda1 = p.lambda2 = v;
            else if (name == "lambda1") p.lambda1 = v;
            else if (name == "lambda2") p.lambda2 = v;
            else if (name == "T") p.T = v;
            break;
        }
    }
}

inline UnitConstants parse_units(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "natural") return UnitConstants::natural();
        if (s == "si") return UnitConstants::si();
        throw ConfigError("units must be \"natural\", \"si\" or an object");
    }
    detail::check_keys(j, {"hbar", "G", "kB"}, "units");
    UnitConstants u;
    if (j.contains("hbar")) u.hbar = detail::number(j["hbar"], "hbar");
    if (j.contains("G")) u.G = detail::number(j["G"], "G");
    if (j.contains("kB")) u.kB = detail::number(j["kB"], "kB");
    try {
        u.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    return u;
}

inline ModelSpec parse_model(const json& j, const UnitConstants& units) {
    if (!j.is_object()) throw ConfigError("'model' must be a JSON object");
    if (!j.contains("kind")) throw ConfigError("model.kind is required");
    const auto kind_name = detail::text(j["kind"], "model.kind");
    const auto kind = model_kind_from_string(kind_name);
    if (!kind) throw ConfigError("unknown model kind '" + kind_name + "'");

    ModelSpec spec;
    switch (*kind) {
        case ModelKind::Ktm: spec = ModelSpec::ktm({}, units); break;
        case ModelKind::DissipativeKtm: spec = ModelSpec::dissipative_ktm({}, units); break;
        case ModelKind::TdLinear: spec = ModelSpec::td_linear({}, units); break;
        case ModelKind::Caldeira: spec = ModelSpec::caldeira({}, units); break;
    }

    std::set<std::string> allowed = scalar_parameters(*kind);
    allowed.insert("kind");
    if (spec.is_ktm_family()) allowed.insert({"minimized_gamma", "include_delta_h0"});
    if (*kind == ModelKind::TdLinear) allowed.insert({"masses", "x0", "alphas"});
    if (*kind == ModelKind::Caldeira) allowed.insert("high_T");
    detail::check_keys(j, allowed, "model");

    // flags first so that gamma checks see the final minimisation mode
    if (spec.is_ktm_family()) {
        auto& p = spec.ktm_params();
        if (j.contains("minimized_gamma")) p.minimized_gamma = detail::boolean(j["minimized_gamma"], "minimized_gamma");
        if (j.contains("include_delta_h0"))
            p.include_delta_h0 = detail::boolean(j["include_delta_h0"], "include_delta_h0");
    }
    if (*kind == ModelKind::Caldeira && j.contains("high_T"))
        spec.caldeira_params().high_T = detail::boolean(j["high_T"], "high_T");
    if (*kind == ModelKind::TdLinear) {
        auto& p = spec.td_params();
        if (j.contains("masses")) p.masses = detail::number_list(j["masses"], "masses");
        if (j.contains("x0")) p.x0 = detail::number_list(j["x0"], "x0");
        if (j.contains("alphas")) p.alphas = detail::number_list(j["alphas"], "alphas");
        if (j.contains("masses") && !j.contains("alphas")) p.alphas.assign(p.masses.size(), 0.0);
    }
    // combined setters ("m", "alpha", ...) before per-particle ones
    for (const char* key : {"m", "omega", "gamma", "alpha", "lambda"})
        if (j.contains(key)) set_parameter(spec, key, detail::number(j[key], key));
    for (const auto& [key, value] : j.items()) {
        if (key == "kind" || !scalar_parameters(*kind).count(key)) continue;
        if (key == "m" || key == "omega" || key == "gamma" || key == "alpha" || key == "lambda") continue;
        set_parameter(spec, key, detail::number(value, key));
    }
    if (spec.kind == ModelKind::Ktm && spec.ktm_params().dissipative())
        throw ConfigError("model 'ktm' requires alpha = 0; use 'dissipative_ktm'");
    try {
        spec.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    return spec;
}

inline ExperimentConfig parse_config(const json& j) {
    detail::check_keys(j, {"model", "units", "engine", "t_max", "n_outputs", "integrator", "dense",
                           "sse", "seed", "threads", "initial_state", "predict", "sweep", "output"},
                       "config");
    ExperimentConfig c;
    const UnitConstants units = j.contains("units") ? parse_units(j["units"]) : UnitConstants{};
    if (!j.contains("model")) throw ConfigError("'model' is required");
    c.model = parse_model(j["model"], units);
    c.model_echo = j["model"];

    if (j.contains("engine")) {
        const auto e = detail::text(j["engine"], "engine");
        if (e == "moments") c.engine = Engine::Moments;
        else if (e == "dense") c.engine = Engine::Dense;
        else if (e == "sse") c.engine = Engine::Sse;
        else throw ConfigError("engine must be moments, dense or sse");
    }
    if (j.contains("t_max")) c.t_max = detail::number(j["t_max"], "t_max");
    if (!(c.t_max > 0.0)) throw ConfigError("t_max must be > 0");
    if (j.contains("n_outputs")) c.n_outputs = detail::unsigned_integer(j["n_outputs"], "n_outputs");
    if (c.n_outputs < 2) throw ConfigError("n_outputs must be >= 2");

    if (j.contains("integrator")) {
        const auto& g = j["integrator"];
        detail::check_keys(g, {"method", "rtol", "atol", "dt", "max_step"}, "integrator");
        if (g.contains("method")) {
            const auto m = detail::text(g["method"], "integrator.method");
            if (m == "rk45_adaptive") c.integrator.method = ode::Method::Rk45Adaptive;
            else if (m == "rk4_fixed") c.integrator.method = ode::Method::Rk4Fixed;
            else throw ConfigError("integrator.method must be rk45_adaptive or rk4_fixed");
        }
        if (g.contains("rtol")) c.integrator.rtol = detail::number(g["rtol"], "integrator.rtol");
        if (g.contains("atol")) c.integrator.atol = detail::number(g["atol"], "integrator.atol");
        if (g.contains("dt")) c.integrator.dt = detail::number(g["dt"], "integrator.dt");
        if (g.contains("max_step")) c.integrator.max_step = detail::number(g["max_step"], "integrator.max_step");
        if (!(c.integrator.rtol > 0.0 && c.integrator.atol > 0.0 && c.integrator.dt > 0.0 &&
              c.integrator.max_step >= 0.0))
            throw ConfigError("integrator tolerances and steps must be > 0");
    }
    if (j.contains("dense")) {
        const auto& g = j["dense"];
        detail::check_keys(g, {"ncut", "dt"}, "dense");
        if (g.contains("ncut")) c.ncut = static_cast<int>(detail::unsigned_integer(g["ncut"], "dense.ncut"));
        if (g.contains("dt")) c.dense_dt = detail::number(g["dt"], "dense.dt");
    }
    if (j.contains("sse")) {
        const auto& g = j["sse"];
        detail::check_keys(g, {"ncut", "dt", "n_traj", "master_seed"}, "sse");
        if (g.contains("ncut")) c.ncut = static_cast<int>(detail::unsigned_integer(g["ncut"], "sse.ncut"));
        if (g.contains("dt")) c.sse_dt = detail::number(g["dt"], "sse.dt");
        if (g.contains("n_traj")) c.n_traj = detail::unsigned_integer(g["n_traj"], "sse.n_traj");
        if (g.contains("master_seed")) c.seed = detail::unsigned_integer(g["master_seed"], "sse.master_seed");
    }
    if (j.contains("seed")) c.seed = detail::unsigned_integer(j["seed"], "seed");
    if (j.contains("threads")) c.threads = static_cast<unsigned>(detail::unsigned_integer(j["threads"], "threads"));
    if (c.engine != Engine::Moments) {
        if (c.ncut < 4) throw ConfigError("ncut must be >= 4");
        if (c.model.kind == ModelKind::TdLinear && c.model.td_params().size() != 2)
            throw ConfigError("Hilbert-space engines need exactly two particles");
    }
    if (c.engine == Engine::Dense && !(c.dense_dt > 0.0)) throw ConfigError("dense.dt must be > 0");
    if (c.engine == Engine::Sse) {
        if (!c.model.is_ktm_family()) throw ConfigError("the sse engine supports ktm and dissipative_ktm only");
        if (!(c.sse_dt > 0.0)) throw ConfigError("sse.dt must be > 0");
        if (c.n_traj < 100) throw ConfigError("sse.n_traj must be >= 100");
    }

    if (j.contains("initial_state")) {
        const auto& g = j["initial_state"];
        detail::check_keys(g, {"kind", "x", "p"}, "initial_state");
        const auto kind = g.contains("kind") ? detail::text(g["kind"], "initial_state.kind") : "vacuum";
        const std::size_t n = c.model.kind == ModelKind::TdLinear ? c.model.td_params().size() : 2;
        if (kind == "vacuum") {
            if (g.contains("x") || g.contains("p")) throw ConfigError("vacuum initial state takes no x/p");
        } else if (kind == "coherent") {
            c.initial.vacuum = false;
            c.initial.x = g.contains("x") ? detail::number_list(g["x"], "initial_state.x") : std::vector<double>(n, 0.0);
            c.initial.p = g.contains("p") ? detail::number_list(g["p"], "initial_state.p") : std::vector<double>(n, 0.0);
            if (c.initial.x.size() != n || c.initial.p.size() != n)
                throw ConfigError("initial_state.x and .p need one entry per particle");
        } else {
            throw ConfigError("initial_state.kind must be vacuum or coherent");
        }
    }

    if (j.contains("predict")) {
        const auto p = detail::text(j["predict"], "predict");
        if (p == "none") c.predict = Prediction::None;
        else if (p == "growth") c.predict = Prediction::Growth;
        else if (p == "asymptote") c.predict = Prediction::Asymptote;
        else throw ConfigError("predict must be none, growth or asymptote");
    }

    if (j.contains("sweep")) {
        const auto& g = j["sweep"];
        detail::check_keys(g, {"parameter", "values"}, "sweep");
        if (!g.contains("parameter") || !g.contains("values"))
            throw ConfigError("sweep needs 'parameter' and 'values'");
        SweepSpec s{detail::text(g["parameter"], "sweep.parameter"),
                    detail::number_list(g["values"], "sweep.values")};
        if (s.values.empty()) throw ConfigError("sweep.values must not be empty");
        if (!scalar_parameters(c.model.kind).count(s.parameter))
            throw ConfigError("sweep parameter '" + s.parameter + "' is not defined for this model");
        for (double v : s.values) {
            ModelSpec probe = c.model;
            set_parameter(probe, s.parameter, v);
            try {
                probe.validate();
            } catch (const InvalidArgument& e) {
                throw ConfigError("sweep value " + std::to_string(v) + ": " + e.what());
            }
        }
        c.sweep = std::move(s);
    }

    if (j.contains("output")) {
        const auto& g = j["output"];
        detail::check_keys(g, {"dir", "timeseries", "summary", "sweep", "include_runtime"}, "output");
        if (g.contains("dir")) c.output.dir = detail::text(g["dir"], "output.dir");
        if (g.contains("timeseries")) c.output.timeseries = detail::text(g["timeseries"], "output.timeseries");
        if (g.contains("summary")) c.output.summary = detail::text(g["summary"], "output.summary");
        if (g.contains("sweep")) c.output.sweep = detail::text(g["sweep"], "output.sweep");
        if (g.contains("include_runtime"))
            c.output.include_runtime = detail::boolean(g["include_runtime"], "output.include_runtime");
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    json j;
    try {
        j = json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

}  // namespace gravchannel::io
