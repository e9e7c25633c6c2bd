#pragma once

#include <string>

namespace twrn {

enum class Provenance { Analytic, Simulated, Oracle };

std::string to_string(Provenance p);

// Stationary occupancy pattern of the two virtual buffers.
struct OccupancySplit {
    double both_empty = 0.0;
    double only1 = 0.0;
    double only2 = 0.0;
    double both = 0.0;

    double sum() const { return both_empty + only1 + only2 + both; }
};

// Relay performance figures. D * S == N_R holds exactly on the analytic and
// oracle paths.
struct Metrics {
    double S = 0.0;    // delivered packets per slot
    double P = 0.0;    // relay transmission attempts per slot
    double N_R = 0.0;  // mean packets queued at the relay
    double D = 0.0;    // relay queueing delay, slots
    OccupancySplit split;
    Provenance provenance = Provenance::Analytic;
};

}  // namespace twrn
