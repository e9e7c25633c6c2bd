#include "twrn/params.hpp"

namespace twrn {

std::string to_string(Mode mode) {
    return mode == Mode::NC ? "nc" : "nonnc";
}

Mode mode_from_string(const std::string& text) {
    if (text == "nc" || text == "NC") return Mode::NC;
    if (text == "nonnc" || text == "non-nc" || text == "NonNC") return Mode::NonNC;
    throw ValidationError("unknown mode '" + text + "' (expected nc or nonnc)");
}

ProtocolParams ProtocolParams::nc(double g1, double g2, double q, double q1, double q2) {
    ProtocolParams p;
    p.g1 = g1;
    p.g2 = g2;
    p.q = q;
    p.q1 = q1;
    p.q2 = q2;
    p.mode = Mode::NC;
    return p;
}

ProtocolParams ProtocolParams::non_nc(double g1, double g2, double q) {
    ProtocolParams p;
    p.g1 = g1;
    p.g2 = g2;
    p.q = q;
    p.q1 = q;
    p.q2 = q;
    p.mode = Mode::NonNC;
    return p;
}

namespace {

void check_unit_range(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0))
        throw ValidationError(std::string(name) + " out of [0,1]");
}

}  // namespace

std::pair<ProtocolParams, std::optional<ArrivalRates>> validate_params(
    ProtocolParams params, std::optional<ArrivalRates> arrivals) {
    check_unit_range(params.g1, "g1");
    check_unit_range(params.g2, "g2");
    check_unit_range(params.q, "q");
    check_unit_range(params.q1, "q1");
    check_unit_range(params.q2, "q2");
    if (params.mode == Mode::NonNC) {
        if (params.q1 != params.q || params.q2 != params.q)
            throw ValidationError("NonNC requires q1 == q2 == q");
    }
    if (arrivals) {
        if (!(arrivals->lam1 >= 0.0 && arrivals->lam1 < 1.0))
            throw ValidationError("lam1 out of [0,1)");
        if (!(arrivals->lam2 >= 0.0 && arrivals->lam2 < 1.0))
            throw ValidationError("lam2 out of [0,1)");
    }
    return {params, arrivals};
}

CoefficientSet coefficients(const ProtocolParams& p) {
    if (p.mode != Mode::NC)
        throw UnsupportedModeError("coefficients are defined for NC mode only");
    CoefficientSet c;
    c.mu = p.q * (1 - p.g1) * (1 - p.g2);
    c.mu1 = p.q * p.g1 * (1 - p.g2);
    c.mu2 = p.q * p.g2 * (1 - p.g1);
    c.mu11 = p.q1 * (1 - p.g2);
    c.mu22 = p.q2 * (1 - p.g1);
    c.lam_b1 = p.g1 * (1 - p.q) * (1 - p.g2);
    c.lam_b2 = p.g2 * (1 - p.q) * (1 - p.g1);
    c.lam_r11 = p.g1 * (1 - p.q1) * (1 - p.g2);
    c.lam_r21 = p.g2 * (1 - p.q1) * (1 - p.g1);
    c.lam_r12 = p.g1 * (1 - p.q2) * (1 - p.g2);
    c.lam_r22 = p.g2 * (1 - p.q2) * (1 - p.g1);
    c.lam_e1 = p.g1 * (1 - p.g2);
    c.lam_e2 = p.g2 * (1 - p.g1);
    return c;
}

}  // namespace twrn
