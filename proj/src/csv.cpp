#include "twrn/csv.hpp"

#include <cstdio>

namespace twrn {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::Analytic: return "analytic";
        case Provenance::Simulated: return "sim";
        case Provenance::Oracle: return "oracle";
    }
    return "?";
}

namespace {

void append(std::string& line, const std::string& cell, bool first = false) {
    if (!first) line += ',';
    line += cell;
}

std::string opt_double(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

}  // namespace

std::string ResultRow::to_line() const {
    std::string line;
    append(line, twrn::to_string(mode), true);
    append(line, format_double(g1));
    append(line, format_double(g2));
    append(line, format_double(q));
    append(line, format_double(q1));
    append(line, format_double(q2));
    append(line, opt_double(lam1));
    append(line, opt_double(lam2));
    append(line, m ? std::to_string(*m) : std::string());
    append(line, twrn::to_string(provenance));
    append(line, opt_double(S));
    append(line, opt_double(P));
    append(line, opt_double(N_R));
    append(line, opt_double(D));
    append(line, converged ? "1" : "0");
    append(line, std::to_string(iterations));
    append(line, seed ? std::to_string(*seed) : std::string());
    append(line, slots ? std::to_string(*slots) : std::string());
    append(line, opt_double(ci_S));
    append(line, opt_double(ci_P));
    append(line, opt_double(ci_D));
    return line;
}

std::string stability_line(double lam1, double lam2, int m, double epsilon,
                           Mode mode) {
    std::string line;
    append(line, format_double(lam1), true);
    append(line, format_double(lam2));
    append(line, std::to_string(m));
    append(line, format_double(epsilon));
    append(line, twrn::to_string(mode));
    return line;
}

}  // namespace twrn
