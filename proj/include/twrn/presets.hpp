#pragma once

#include <optional>
#include <string>
#include <vector>

#include "twrn/params.hpp"

namespace twrn {

// One fully resolved experiment point.
struct SweepPoint {
    ProtocolParams params;
    std::optional<ArrivalRates> arrivals;
    int m = 4;
};

// A stability trace to run: parameters plus a file suffix distinguishing the
// curves of one figure.
struct StabilityCurve {
    ProtocolParams params;
    int m = 6;
    std::string suffix;
};

struct Preset {
    std::string name;
    std::string description;
    std::vector<SweepPoint> points;        // analyze / simulate presets
    std::vector<StabilityCurve> curves;    // stability presets
};

// Known presets: fig8..fig14 (saturated sweeps), fig18, fig19 (unsaturated
// sweeps), fig15..fig17 (stability regions).
Preset lookup_preset(const std::string& name);

std::vector<std::string> preset_names();

}  // namespace twrn
