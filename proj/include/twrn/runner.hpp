#pragma once

#include <vector>

#include "twrn/config.hpp"
#include "twrn/metrics.hpp"
#include "twrn/presets.hpp"
#include "twrn/simulator.hpp"

namespace twrn {

// Tolerances of the triple-agreement check (relative, analytic vs oracle and
// analytic vs simulation).
struct VerifyTolerances {
    double oracle_S = 0.01, oracle_P = 0.01, oracle_D = 0.03;
    double sim_S = 0.02, sim_P = 0.02, sim_D = 0.05;
};

struct VerifyOutcome {
    SweepPoint point;
    Metrics analytic;
    Metrics oracle;
    SimMetrics sim;
    bool analytic_converged = false;
    bool pass_oracle = false;
    bool pass_sim = false;
};

// Runs analytic, truncated-oracle and Monte Carlo paths on every point and
// compares them under `tol`.
std::vector<VerifyOutcome> verify_grid(const std::vector<SweepPoint>& points,
                                       const SimSpec& sim, int oracle_cap,
                                       int threads,
                                       const VerifyTolerances& tol = {});

// The parameter grid behind `verify --grid default`.
std::vector<SweepPoint> default_verify_grid(int m = 4);

// Resolves presets / sweep blocks / single-point flags into concrete points.
std::vector<SweepPoint> expand_points(const ExperimentConfig& cfg);

int run_analyze(const ExperimentConfig& cfg);
int run_simulate(const ExperimentConfig& cfg);
int run_stability(const ExperimentConfig& cfg);
int run_verify(const ExperimentConfig& cfg);

// Dispatch on cfg.command; returns the process exit code (0 = success,
// 2 = at least one point failed to converge or verify).
int run_experiment(const ExperimentConfig& cfg);

}  // namespace twrn
