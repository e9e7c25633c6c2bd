#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "twrn/metrics.hpp"
#include "twrn/params.hpp"

namespace twrn {

struct SimConfig {
    ProtocolParams params;
    std::optional<ArrivalRates> arrivals;  // absent = saturated end nodes
    long long horizon = 1'000'000;
    long long warmup = -1;  // negative = 10% of horizon
    std::uint64_t seed = 12345;
    int replications = 1;
    int threads = 0;  // 0 = hardware concurrency
};

// Replication seeds are derived from the base seed with one splitmix64 step:
// sub_seed(base, i) = splitmix64(base + i * 0x9E3779B97F4A7C15).
std::uint64_t sub_seed(std::uint64_t base, int replication);

struct QueueTrace {
    double mean = 0.0;          // time-average occupancy over the window
    double drift_slope = 0.0;   // least-squares packets/slot over the window
    long long received = 0;     // full-run arrivals into this buffer
    long long delivered = 0;    // full-run departures
    long long final_len = 0;
};

struct SimMetrics {
    double S = 0.0, P = 0.0, N_R = 0.0, D = 0.0;
    double ci_S = 0.0, ci_P = 0.0, ci_NR = 0.0, ci_D = 0.0;  // 95% half-widths
    long long slots = 0;  // measured window, summed over replications
    long long relay_attempts = 0;
    long long coded_attempts = 0;
    long long uplink_collisions = 0;
    long long deliveries = 0;
    // Window slots (and relay attempts) split by virtual-buffer occupancy.
    long long slots_both_busy = 0, attempts_both_busy = 0;
    long long slots_only1 = 0, attempts_only1 = 0;
    long long slots_only2 = 0, attempts_only2 = 0;
    std::array<QueueTrace, 4> queues;  // (l1, k1, k2, l2); l-entries unused when saturated
    double end_node_delay = 0.0;       // mean slots from end-node arrival to uplink
    int replications = 1;
    std::vector<SimMetrics> per_rep;   // populated by merged results
};

// Slot-by-slot Monte Carlo run. Identical (config, seed) produces identical
// results; cfg.replications > 1 merges independent streams.
SimMetrics simulate(const SimConfig& cfg);

// Explicit multi-replication run (replications >= 2).
SimMetrics replicate(const SimConfig& cfg);

struct DriftVerdict {
    std::array<bool, 4> unstable{};  // per queue, majority over replications
    bool any_unstable = false;
};

// Empirical stability check: a queue is unstable when its occupancy slope
// exceeds the threshold (packets/slot) in a majority of replications.
DriftVerdict drift_test(const SimConfig& cfg, double slope_threshold = 1e-5);

}  // namespace twrn
