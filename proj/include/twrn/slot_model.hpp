#pragma once

#include <array>
#include <optional>
#include <vector>

#include "twrn/params.hpp"

namespace twrn {

// Buffer coordinate order used everywhere: (l1, k1, k2, l2).
enum Coord : int { CoordL1 = 0, CoordK1 = 1, CoordK2 = 2, CoordL2 = 3 };

// Occupancy snapshot of the network. End-node buffers are tracked only in
// unsaturated operation; an absent l means that node always has traffic.
struct NetworkState {
    std::optional<long> l1;
    std::optional<long> l2;
    long k1 = 0;
    long k2 = 0;

    static NetworkState saturated(long k1, long k2) {
        NetworkState s;
        s.k1 = k1;
        s.k2 = k2;
        return s;
    }
    static NetworkState unsaturated(long l1, long k1, long k2, long l2) {
        NetworkState s;
        s.l1 = l1;
        s.l2 = l2;
        s.k1 = k1;
        s.k2 = k2;
        return s;
    }

    bool node1_backlogged() const { return !l1 || *l1 > 0; }
    bool node2_backlogged() const { return !l2 || *l2 > 0; }
};

// One aggregated outcome of a slot: net occupancy change per coordinate,
// its probability, and what the relay did. Outcomes with equal
// (delta, tx_count, success_count) are merged.
struct SlotOutcome {
    std::array<int, 4> delta{};  // indexed by Coord; untracked coordinates stay 0
    double prob = 0.0;
    int tx_count = 0;       // relay attempts this slot (0 or 1)
    int success_count = 0;  // packets the relay delivered this slot (0..2)
};

// Enumerates the complete outcome distribution of one slot from `state`.
// Resolution order: transmission attempts, receptions (uplink needs a quiet
// relay and no peer transmission, downlink needs a quiet destination), then
// new end-node arrivals last. Arrivals must be given iff at least one
// end-node buffer is tracked.
std::vector<SlotOutcome> slot_outcomes(
    const NetworkState& state, const ProtocolParams& params,
    const std::optional<ArrivalRates>& arrivals = std::nullopt);

// Mean relay attempts and deliveries per slot spent in `state`.
struct SlotRates {
    double tx = 0.0;
    double success = 0.0;
};
SlotRates slot_rates(const NetworkState& state, const ProtocolParams& params,
                     const std::optional<ArrivalRates>& arrivals = std::nullopt);

}  // namespace twrn
