#include "twrn/presets.hpp"

#include <cmath>

namespace twrn {

namespace {

std::vector<double> grid(double start, double stop, double step) {
    std::vector<double> v;
    for (double x = start; x < stop + step * 0.5; x += step) v.push_back(x);
    return v;
}

void add_g2_sweep(Preset& p, double k, double q, double q1, double q2, int m,
                  double g2_max = 0.48) {
    for (double g2 : grid(0.02, std::min(g2_max, 0.98 / k - 0.02), 0.02)) {
        SweepPoint pt;
        pt.params = ProtocolParams::nc(k * g2, g2, q, q1, q2);
        pt.m = m;
        p.points.push_back(pt);
    }
}

void add_lambda_sweep(Preset& p, const ProtocolParams& params, int m,
                      double lam_max) {
    for (double lam : grid(0.01, lam_max, 0.01)) {
        SweepPoint pt;
        pt.params = params;
        pt.arrivals = ArrivalRates{lam, lam};
        pt.m = m;
        p.points.push_back(pt);
    }
}

}  // namespace

Preset lookup_preset(const std::string& name) {
    Preset p;
    p.name = name;
    if (name == "fig8") {
        p.description = "throughput vs offered traffic, q=0.75 q1=q2=0.4, k in {1,2,4}";
        for (double k : {1.0, 2.0, 4.0}) add_g2_sweep(p, k, 0.75, 0.4, 0.4, 4);
    } else if (name == "fig9") {
        p.description = "throughput vs offered traffic, k=2, q=0.75, q1=q2 in {0.75, 0.4}";
        add_g2_sweep(p, 2.0, 0.75, 0.75, 0.75, 4);
        add_g2_sweep(p, 2.0, 0.75, 0.4, 0.4, 4);
    } else if (name == "fig10") {
        p.description = "delay vs throughput, q=q2=0.75, q1 in {0.45, 0.55, 0.75}, k=2";
        for (double q1 : {0.45, 0.55, 0.75}) add_g2_sweep(p, 2.0, 0.75, q1, 0.75, 4);
    } else if (name == "fig11") {
        p.description = "metrics vs q1, q=q2=0.75, g2=0.25, k=2";
        for (double q1 : grid(0.20, 0.75, 0.05)) {
            SweepPoint pt;
            pt.params = ProtocolParams::nc(0.5, 0.25, 0.75, q1, 0.75);
            pt.m = 4;
            p.points.push_back(pt);
        }
    } else if (name == "fig12") {
        p.description = "delay vs throughput, q=q1=0.75, q2 in {0.05, 0.35, 1.0}, k=2";
        for (double q2 : {0.05, 0.35, 1.0}) add_g2_sweep(p, 2.0, 0.75, 0.75, q2, 4);
    } else if (name == "fig13") {
        p.description = "metrics vs q2, q=q1=0.75, g2=0.25, k=2";
        for (double q2 : grid(0.05, 0.75, 0.05)) {
            SweepPoint pt;
            pt.params = ProtocolParams::nc(0.5, 0.25, 0.75, 0.75, q2);
            pt.m = 4;
            p.points.push_back(pt);
        }
    } else if (name == "fig14") {
        p.description = "metrics vs q, q1=q2=0.75, g2=0.25, k=2";
        for (double q : grid(0.35, 1.0, 0.05)) {
            SweepPoint pt;
            pt.params = ProtocolParams::nc(0.5, 0.25, q, 0.75, 0.75);
            pt.m = 4;
            p.points.push_back(pt);
        }
    } else if (name == "fig15") {
        p.description = "stability region, q=0.7, g1=g2=0.5, m=6";
        p.curves = {{ProtocolParams::nc(0.5, 0.5, 0.7, 0.7, 0.7), 6, "_nc07"},
                    {ProtocolParams::nc(0.5, 0.5, 0.7, 0.4, 0.4), 6, "_nc04"},
                    {ProtocolParams::non_nc(0.5, 0.5, 0.7), 6, "_nonnc"}};
    } else if (name == "fig16") {
        p.description = "stability region, q=0.7, g2=0.25, k=2, m=6";
        p.curves = {{ProtocolParams::nc(0.5, 0.25, 0.7, 0.7, 0.7), 6, "_nc07"},
                    {ProtocolParams::nc(0.5, 0.25, 0.7, 0.4, 0.4), 6, "_nc04"},
                    {ProtocolParams::non_nc(0.5, 0.25, 0.7), 6, "_nonnc"}};
    } else if (name == "fig17") {
        p.description = "stability region, q=0.9, g2=0.1, k=2, m=6";
        p.curves = {{ProtocolParams::nc(0.2, 0.1, 0.9, 0.9, 0.9), 6, "_nc09"},
                    {ProtocolParams::nc(0.2, 0.1, 0.9, 0.4, 0.4), 6, "_nc04"},
                    {ProtocolParams::non_nc(0.2, 0.1, 0.9), 6, "_nonnc"}};
    } else if (name == "fig18" || name == "fig19") {
        p.description = "delay/power vs arrival rate, q=0.7, g1=g2=0.5, lam1=lam2";
        add_lambda_sweep(p, ProtocolParams::nc(0.5, 0.5, 0.7, 0.7, 0.7), 4, 0.16);
        add_lambda_sweep(p, ProtocolParams::nc(0.5, 0.5, 0.7, 0.4, 0.4), 4, 0.16);
        add_lambda_sweep(p, ProtocolParams::non_nc(0.5, 0.5, 0.7), 4, 0.16);
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    return p;
}

std::vector<std::string> preset_names() {
    return {"fig8",  "fig9",  "fig10", "fig11", "fig12", "fig13",
            "fig14", "fig15", "fig16", "fig17", "fig18", "fig19"};
}

}  // namespace twrn
