#pragma once

#include <Eigen/Sparse>
#include <optional>
#include <vector>

#include "twrn/metrics.hpp"
#include "twrn/slot_model.hpp"

namespace twrn {

// Exact finite Markov chain of the full network on a box with a reflecting
// cap: increments at a capped coordinate stay at the cap, so no probability
// mass is lost. Saturated chains track (k1, k2), unsaturated chains
// (l1, k1, k2, l2).
struct TruncatedChain {
    int cap = 40;
    bool unsaturated = false;
    ProtocolParams params;
    std::optional<ArrivalRates> arrivals;
    Eigen::SparseMatrix<double, Eigen::RowMajor> P;

    long state_count() const { return P.rows(); }
    long index(const NetworkState& s) const;
    NetworkState state(long idx) const;
};

TruncatedChain build_truncated(const ProtocolParams& params,
                               std::optional<ArrivalRates> arrivals, int cap,
                               std::size_t max_states = 2'000'000);

// Stationary distribution of the recurrent class reachable from the
// all-empty state, by sparse direct solve of the global balance equations.
Eigen::VectorXd solve_truncated(const TruncatedChain& chain);

// Exact metrics on the truncated model.
Metrics oracle_metrics(const TruncatedChain& chain, const Eigen::VectorXd& pi);

}  // namespace twrn
