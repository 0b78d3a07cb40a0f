// gravchannel: command-line runner for the gravity measurement-feedback models.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "gravchannel/eta.hpp"
#include "gravchannel/io/config.hpp"
#include "gravchannel/io/run.hpp"

namespace io = gravchannel::io;

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_out = true) {
    cmd->add_option("--config", f.config, "experiment configuration (JSON)")->required();
    cmd->add_option("--seed", f.seed, "master seed (overrides the config)");
    if (with_out) cmd->add_option("--out", f.out, "output directory (overrides the config)");
}

io::ExperimentConfig load(const CommonFlags& f) {
    auto cfg = io::load_config(f.config);
    if (f.seed) cfg.seed = *f.seed;
    if (f.out) cfg.output.dir = *f.out;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulate gravity-mediated measurement-feedback channels"};
    app.require_subcommand(1);

    CommonFlags sim_flags, sweep_flags, asym_flags, val_flags;
    auto* sim = app.add_subcommand("simulate", "run one experiment and write timeseries + summary");
    add_common(sim, sim_flags);
    auto* swp = app.add_subcommand("sweep", "run the configured parameter sweep");
    add_common(swp, sweep_flags);
    auto* asym = app.add_subcommand("asymptote", "print closed-form and Lyapunov asymptotes");
    add_common(asym, asym_flags, false);
    auto* val = app.add_subcommand("validate", "check a configuration without running it");
    add_common(val, val_flags, false);

    double R0 = 1.0, d = 1.0, tol = 1e-10;
    bool quadrature = false;
    auto* eta = app.add_subcommand("eta", "print the eta coefficients for (R0, d)");
    eta->add_option("--R0", R0, "smearing radius")->required();
    eta->add_option("--d", d, "separation")->required();
    eta->add_flag("--quadrature", quadrature, "also evaluate by numerical quadrature");
    eta->add_option("--tol", tol, "quadrature tolerance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : io::kInvalidConfig;
    }

    if (*sim)
        return io::guarded([&] { return io::run(load(sim_flags)); });
    if (*swp)
        return io::guarded([&] { return io::sweep(load(sweep_flags)); });
    if (*asym)
        return io::guarded([&] {
            std::cout << io::asymptote_report(load(asym_flags)).dump(2) << '\n';
            return int{io::kOk};
        });
    if (*val)
        return io::guarded([&] {
            load(val_flags);
            std::cout << "ok\n";
            return int{io::kOk};
        });
    if (*eta)
        return io::guarded([&] {
            gravchannel::detail::require(R0 > 0.0 && d > 0.0, "R0 and d must be > 0");
            const auto c = gravchannel::eta_closed(R0, d);
            io::ordered_json j;
            j["R0"] = R0;
            j["d"] = d;
            j["closed"] = {{"eta", c.eta}, {"eta12", c.eta12}, {"eta_plus", c.eta_plus}, {"eta_minus", c.eta_minus}};
            if (quadrature) {
                const auto q = gravchannel::eta_quadrature(R0, d, tol);
                j["quadrature"] = {{"eta", q.eta}, {"eta12", q.eta12}, {"eta_plus", q.eta_plus}, {"eta_minus", q.eta_minus}};
            }
            j["eta12_point_mass"] = -2.0 / (d * d * d);
            std::cout << j.dump(2) << '\n';
            return int{io::kOk};
        });
    return io::kInvalidConfig;
}
