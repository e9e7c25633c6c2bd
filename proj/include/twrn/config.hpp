#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "twrn/params.hpp"

namespace twrn {

struct SweepSpec {
    std::string variable;  // g1 g2 q q1 q2 q12 lam lam1 lam2
    double start = 0, stop = 0, step = 0;
};

struct SolverSpec {
    int m = 4;
    double tol = 1e-8;
    int max_iter = 500;
    double epsilon = 1e-3;
};

struct SimSpec {
    long long horizon = 1'000'000;
    long long warmup = -1;
    std::uint64_t seed = 12345;
    int replications = 4;
};

struct StabilityGridSpec {
    double lam1_start = 0.01;
    double lam1_step = 0.001;
    double lam2_step = 0.001;
    double lam1_max = 0.98;
};

struct ExperimentConfig {
    std::string command;  // analyze | simulate | stability | verify
    Mode mode = Mode::NC;
    std::optional<double> g1, g2, k, q, q1, q2;
    std::optional<double> lam1, lam2;
    std::optional<SweepSpec> sweep;
    SolverSpec solver;
    SimSpec sim;
    StabilityGridSpec stability;
    std::string out_path = "out.csv";
    std::string preset;
    std::string grid = "default";  // verify grid
    int threads = 0;
};

// Applies one `[section] key = value` assignment; validates key names and
// value ranges. `where` names the source (file:line or flag) for diagnostics.
void apply_setting(ExperimentConfig& cfg, const std::string& section,
                   const std::string& key, const std::string& value,
                   const std::string& where);

// Line-oriented `key = value` file with `[section]` headers and # comments.
void load_config_file(ExperimentConfig& cfg, const std::string& path);

}  // namespace twrn
