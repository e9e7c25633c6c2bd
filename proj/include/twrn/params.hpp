#pragma once

#include <optional>
#include <string>
#include <utility>

#include "twrn/errors.hpp"

namespace twrn {

// Relay forwarding discipline. NC combines the two head-of-line packets
// with XOR whenever both virtual buffers are backlogged; NonNC always
// forwards a single native packet.
enum class Mode { NC, NonNC };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& text);

// Per-slot transmission probabilities of the three contending nodes.
//
//   g1, g2 : end nodes 1 and 2 (applied only while backlogged)
//   q      : relay, both virtual buffers nonempty
//   q1, q2 : relay, only virtual buffer 1 (resp. 2) nonempty
//
// In NonNC mode the relay uses the single probability q regardless of
// which buffers are busy, so q1 == q2 == q after validation.
struct ProtocolParams {
    double g1 = 0.0;
    double g2 = 0.0;
    double q = 0.0;
    double q1 = 0.0;
    double q2 = 0.0;
    Mode mode = Mode::NC;

    static ProtocolParams nc(double g1, double g2, double q, double q1, double q2);
    static ProtocolParams non_nc(double g1, double g2, double q);
};

// Bernoulli arrival probabilities at the end nodes (unsaturated operation).
struct ArrivalRates {
    double lam1 = 0.0;
    double lam2 = 0.0;
};

// Checks every probability range and the NonNC consistency rule; returns the
// normalized inputs. Throws ValidationError naming the offending field.
std::pair<ProtocolParams, std::optional<ArrivalRates>> validate_params(
    ProtocolParams params, std::optional<ArrivalRates> arrivals = std::nullopt);

// One-slot transition coefficients of the relay chain, NC mode.
// mu-coefficients are relay deliveries, lam-coefficients receptions; the
// second index of lam_r names which virtual buffer is the only busy one.
struct CoefficientSet {
    double mu = 0.0;    // coded packet, both constituents delivered
    double mu1 = 0.0;   // both buffers busy, only buffer 1's constituent delivered
    double mu2 = 0.0;   // both buffers busy, only buffer 2's constituent delivered
    double mu11 = 0.0;  // native delivery from buffer 1, buffer 2 empty
    double mu22 = 0.0;  // native delivery from buffer 2, buffer 1 empty
    double lam_b1 = 0.0;   // reception into buffer 1, both busy
    double lam_b2 = 0.0;   // reception into buffer 2, both busy
    double lam_r11 = 0.0;  // reception into buffer 1, only buffer 1 busy
    double lam_r12 = 0.0;  // reception into buffer 1, only buffer 2 busy
    double lam_r21 = 0.0;  // reception into buffer 2, only buffer 1 busy
    double lam_r22 = 0.0;  // reception into buffer 2, only buffer 2 busy
    double lam_e1 = 0.0;   // reception into buffer 1, both empty
    double lam_e2 = 0.0;   // reception into buffer 2, both empty
};

// Evaluates the coefficient formulas for validated NC parameters.
// Throws UnsupportedModeError in NonNC mode (the coefficients assume the
// three-probability relay).
CoefficientSet coefficients(const ProtocolParams& params);

}  // namespace twrn
