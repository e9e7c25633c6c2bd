// Command-line experiment runner: analytic sweeps, Monte Carlo runs,
// stability-region tracing and triple-oracle verification, all emitting the
// shared CSV schema.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <string>

#include "twrn/config.hpp"
#include "twrn/presets.hpp"
#include "twrn/runner.hpp"

namespace {

struct FlagSet {
    std::map<std::string, std::string> values;  // "section.key" -> value
    std::string config_path;
};

void add_setting_flag(CLI::App* cmd, FlagSet& flags, const std::string& flag,
                      const std::string& section, const std::string& key,
                      const std::string& help) {
    const std::string id = section + "." + key;
    cmd->add_option_function<std::string>(
           flag,
           [&flags, id](const std::string& v) { flags.values[id] = v; }, help)
        ->type_name("VAL");
}

void add_common_flags(CLI::App* cmd, FlagSet& flags) {
    cmd->add_option("--config", flags.config_path,
                    "key = value config file; flags override its values");
    add_setting_flag(cmd, flags, "--mode", "params", "mode", "nc or nonnc");
    add_setting_flag(cmd, flags, "--g1", "params", "g1", "end node 1 tx probability");
    add_setting_flag(cmd, flags, "--g2", "params", "g2", "end node 2 tx probability");
    add_setting_flag(cmd, flags, "--k", "params", "k", "imbalance factor g1 = k*g2");
    add_setting_flag(cmd, flags, "--q", "params", "q", "relay tx probability, both buffers busy");
    add_setting_flag(cmd, flags, "--q1", "params", "q1", "relay tx probability, only buffer 1 busy");
    add_setting_flag(cmd, flags, "--q2", "params", "q2", "relay tx probability, only buffer 2 busy");
    add_setting_flag(cmd, flags, "--lam1", "arrivals", "lam1", "arrival rate at end node 1");
    add_setting_flag(cmd, flags, "--lam2", "arrivals", "lam2", "arrival rate at end node 2");
    add_setting_flag(cmd, flags, "--m", "solver", "m", "phases per distributed chain");
    add_setting_flag(cmd, flags, "--tol", "solver", "tol", "fixed point tolerance");
    add_setting_flag(cmd, flags, "--max-iter", "solver", "max_iter", "fixed point iteration cap");
    add_setting_flag(cmd, flags, "--epsilon", "solver", "epsilon", "saturation threshold on r");
    add_setting_flag(cmd, flags, "--out", "output", "path", "output CSV path");
    add_setting_flag(cmd, flags, "--threads", "run", "threads", "worker threads (0 = all cores)");
}

void add_sweep_flags(CLI::App* cmd, FlagSet& flags) {
    add_setting_flag(cmd, flags, "--sweep-var", "sweep", "variable",
                     "swept variable: g1 g2 q q1 q2 q12 lam lam1 lam2");
    add_setting_flag(cmd, flags, "--sweep-start", "sweep", "start", "sweep start");
    add_setting_flag(cmd, flags, "--sweep-stop", "sweep", "stop", "sweep stop (inclusive)");
    add_setting_flag(cmd, flags, "--sweep-step", "sweep", "step", "sweep step");
}

void add_sim_flags(CLI::App* cmd, FlagSet& flags) {
    add_setting_flag(cmd, flags, "--horizon", "sim", "horizon", "slots per replication");
    add_setting_flag(cmd, flags, "--warmup", "sim", "warmup",
                     "discarded slots (negative = 10% of horizon)");
    add_setting_flag(cmd, flags, "--seed", "sim", "seed", "base RNG seed");
    add_setting_flag(cmd, flags, "--reps", "sim", "replications", "independent replications");
}

int dispatch(const std::string& command, const FlagSet& flags,
             const std::string& preset, const std::string& grid) {
    twrn::ExperimentConfig cfg;
    cfg.command = command;
    if (command == "verify") cfg.sim.horizon = 2'000'000;
    if (const char* env = std::getenv("TWRN_SEED"))
        twrn::apply_setting(cfg, "sim", "seed", env, "env TWRN_SEED");
    if (!flags.config_path.empty())
        twrn::load_config_file(cfg, flags.config_path);
    for (const auto& [id, value] : flags.values) {
        const auto dot = id.find('.');
        twrn::apply_setting(cfg, id.substr(0, dot), id.substr(dot + 1), value,
                            "flag --" + id.substr(dot + 1));
    }
    cfg.preset = preset;
    cfg.grid = grid;
    return twrn::run_experiment(cfg);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"slotted-ALOHA two-way relay network analysis"};
    app.require_subcommand(1);

    FlagSet flags;
    std::string preset, grid = "default";

    CLI::App* analyze = app.add_subcommand(
        "analyze", "matrix-analytic metrics over a parameter sweep");
    add_common_flags(analyze, flags);
    add_sweep_flags(analyze, flags);
    analyze->add_option("--preset", preset, "figure preset (fig8..fig14, fig18, fig19)");

    CLI::App* simulate = app.add_subcommand(
        "simulate", "Monte Carlo metrics over a parameter sweep");
    add_common_flags(simulate, flags);
    add_sweep_flags(simulate, flags);
    add_sim_flags(simulate, flags);
    simulate->add_option("--preset", preset, "figure preset (fig8..fig14, fig18, fig19)");

    CLI::App* stability = app.add_subcommand(
        "stability", "trace the stability-region frontier");
    add_common_flags(stability, flags);
    add_setting_flag(stability, flags, "--lam1-start", "stability", "lam1_start",
                     "first lam1 grid value");
    add_setting_flag(stability, flags, "--lam1-step", "stability", "lam1_step",
                     "lam1 grid step");
    add_setting_flag(stability, flags, "--lam2-step", "stability", "lam2_step",
                     "lam2 search resolution");
    add_setting_flag(stability, flags, "--lam1-max", "stability", "lam1_max",
                     "upper bound on the traced lam1 range");
    stability->add_option("--preset", preset, "stability preset (fig15..fig17)");

    CLI::App* verify = app.add_subcommand(
        "verify", "triple agreement: analytic vs exact oracle vs simulation");
    add_common_flags(verify, flags);
    add_sim_flags(verify, flags);
    verify->add_option("--grid", grid, "verification grid: default or quick");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        return dispatch(app.get_subcommands().front()->get_name(), flags, preset,
                        grid);
    } catch (const twrn::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
