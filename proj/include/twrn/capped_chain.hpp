#pragma once

#include <array>
#include <vector>

#include "twrn/qbd.hpp"
#include "twrn/slot_model.hpp"

namespace twrn {

// One clipped coordinate of a distributed chain: its axis and the
// conditional probability Pr{coord == m-1 | coord >= m-1} used to split
// decrements observed at the cap.
struct ClippedCoord {
    int coord = 0;  // Coord index
    double r = 1.0;
};

// Description of a distributed chain: the level coordinate runs free, every
// clipped coordinate is folded to {0..m-1}. `present` marks which of the
// four buffers exist in the model (absent end-node buffers mean that node is
// saturated).
struct CappedChainSpec {
    int own_coord = CoordK1;
    std::vector<ClippedCoord> clipped;  // phase digits, first entry fastest
    int m = 4;
    ProtocolParams params;
    std::optional<ArrivalRates> arrivals;
    std::array<bool, 4> present{false, true, true, false};
};

// Number of phases, m^(#clipped).
int phase_count(const CappedChainSpec& spec);

// Phase index <-> digit helpers.
int phase_digit(const CappedChainSpec& spec, int phase, int clipped_index);

// Representative occupancy snapshot for (level-class, phase). level_class 0
// is the empty boundary level; 1 stands for any busy level.
NetworkState representative_state(const CappedChainSpec& spec, int level_class,
                                  int phase);

// Builds the QBD blocks by enumerating slot outcomes on every
// (level-class, phase) state. A decrement of a clipped coordinate sitting at
// m-1 moves to m-2 with weight r and stays with weight 1-r; increments at
// the cap stay put.
QbdBlocks build_capped_chain(const CappedChainSpec& spec);

}  // namespace twrn
