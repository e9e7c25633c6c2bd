#pragma once

#include <array>
#include <vector>

#include "twrn/capped_chain.hpp"
#include "twrn/metrics.hpp"
#include "twrn/qbd.hpp"

namespace twrn {

// The four coupled distributed chains of the unsaturated network, in
// coordinate order (l1, k1, k2, l2).
enum class UnsatChain : int { EndNode1 = 0, VBuf1 = 1, VBuf2 = 2, EndNode2 = 3 };

const char* chain_name(UnsatChain c);

// Distributed chain with the named coordinate as level and the other three
// folded to m phases each (m^3 phases total). r_others holds the conditional
// probabilities of the clipped coordinates in ascending coordinate order.
struct UnsatChainSpec {
    UnsatChain own = UnsatChain::VBuf1;
    int m = 4;
    std::array<double, 3> r_others{0.5, 0.5, 0.5};
    ProtocolParams params;
    ArrivalRates arrivals;
};

QbdBlocks build_unsat_chain(const UnsatChainSpec& spec);

struct UnsatFixedPointResult {
    std::array<double, 4> r{1.0, 1.0, 1.0, 1.0};
    std::array<QbdSolution, 4> sol;
    int iterations = 0;
    bool converged = false;
    double final_delta = 0.0;
    std::vector<double> delta_history;
    ProtocolParams params;
    ArrivalRates arrivals;
    int m = 4;
};

// Round-robin conditional-probability updates over the four chains. Throws
// UnstableChainError naming the queue that saturated.
UnsatFixedPointResult fixed_point_unsat(const ProtocolParams& params,
                                        const ArrivalRates& arrivals, int m = 4,
                                        double tol = 1e-8, int max_iter = 500,
                                        double r_init = 0.5);

// Relay metrics from the virtual-buffer chains of a converged fixed point.
Metrics metrics_unsat(const UnsatFixedPointResult& result);

// Mean end-node backlog, reported alongside the relay metrics.
std::array<double, 2> end_node_occupancy(const UnsatFixedPointResult& result);

// NonNC counterpart of fixed_point_unsat (params are normalized to the
// single-probability relay first).
UnsatFixedPointResult analytic_nonnc_chain(const ProtocolParams& params,
                                           const ArrivalRates& arrivals, int m = 4,
                                           double tol = 1e-8, int max_iter = 500);

struct StabilityBoundary {
    std::vector<std::pair<double, double>> points;  // (lam1, lam2), sorted
    int m = 6;
    double epsilon = 1e-3;
    double step = 0.001;
    Mode mode = Mode::NC;
    ProtocolParams params;
};

struct StabilityOptions {
    int m = 6;
    double lam1_start = 0.01;
    double lam1_step = 0.001;
    double lam2_step = 0.001;
    double lam1_max = 0.98;
    double lam2_max = 0.98;
    double epsilon = 1e-3;    // saturation threshold on the conditional r
    double fp_tol = 1e-8;
    int fp_max_iter = 300;
    double solver_tol = 1e-8;
    int solver_max_iter = 40000;
    int threads = 0;  // 0 = hardware concurrency
};

// Traces the stability frontier: for each lam1 on the grid, the largest lam2
// for which every queue stays unsaturated, with end node 2 held saturated
// while the environment chains are solved. Stops once end node 1 itself can
// no longer sustain lam1. Throws SaturationOrderError if a relay buffer
// saturates first.
StabilityBoundary stability_boundary(const ProtocolParams& params,
                                     const StabilityOptions& opt = {});

}  // namespace twrn
