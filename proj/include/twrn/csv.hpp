#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "twrn/metrics.hpp"
#include "twrn/params.hpp"

namespace twrn {

// Shared result schema for analyze / simulate / verify outputs. Inapplicable
// fields stay empty.
inline constexpr const char* kResultHeader =
    "mode,g1,g2,q,q1,q2,lam1,lam2,m,provenance,S,P,N_R,D,converged,iterations,"
    "seed,slots,ci_S,ci_P,ci_D";

inline constexpr const char* kStabilityHeader = "lam1,lam2,m,epsilon,mode";

// Locale-independent %.10g rendering used for every floating-point cell, so
// identical runs produce byte-identical files.
std::string format_double(double v);

struct ResultRow {
    Mode mode = Mode::NC;
    double g1 = 0, g2 = 0, q = 0, q1 = 0, q2 = 0;
    std::optional<double> lam1, lam2;
    std::optional<int> m;
    Provenance provenance = Provenance::Analytic;
    std::optional<double> S, P, N_R, D;
    bool converged = false;
    int iterations = 0;
    std::optional<std::uint64_t> seed;
    std::optional<long long> slots;
    std::optional<double> ci_S, ci_P, ci_D;

    std::string to_line() const;
};

std::string stability_line(double lam1, double lam2, int m, double epsilon,
                           Mode mode);

}  // namespace twrn
