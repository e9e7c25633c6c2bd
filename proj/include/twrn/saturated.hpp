#pragma once

#include <vector>

#include "twrn/capped_chain.hpp"
#include "twrn/metrics.hpp"
#include "twrn/params.hpp"
#include "twrn/qbd.hpp"

namespace twrn {

// One of the two coupled distributed chains of the saturated relay: the
// chain's own virtual buffer is the level, the other buffer is folded to m
// phases and coupled through r_other.
struct DistributedChainSpec {
    int own_buffer = 1;  // 1 or 2
    int m = 4;
    double r_other = 0.5;
    ProtocolParams params;
};

QbdBlocks build_distributed_chain(const DistributedChainSpec& spec);

// Pr{level == m-1 | level >= m-1} from a solved chain. An empty tail returns
// 1, which keeps the coupled blocks stochastic and is transition-irrelevant.
double conditional_probability(const QbdSolution& sol, int m);

struct FixedPointResult {
    double r1 = 1.0, r2 = 1.0;
    QbdSolution sol1, sol2;
    int iterations = 0;
    bool converged = false;
    double final_delta = 0.0;
    std::vector<double> delta_history;
    ProtocolParams params;
    int m = 4;
};

// Alternating solve of the two distributed chains until the conditional
// probabilities settle. Throws UnstableChainError (naming the chain) if
// either queue has no stationary distribution.
FixedPointResult fixed_point(const ProtocolParams& params, int m = 4,
                             double tol = 1e-8, int max_iter = 500,
                             double r_init = 0.5);

// Throughput, power, occupancy and delay from a converged fixed point.
Metrics metrics(const FixedPointResult& result, const CoefficientSet& coeff);

}  // namespace twrn
