#include "twrn/runner.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <thread>

#include "twrn/csv.hpp"
#include "twrn/oracle.hpp"
#include "twrn/saturated.hpp"
#include "twrn/unsaturated.hpp"

namespace twrn {

namespace {

int worker_count(int requested) {
    if (requested > 0) return requested;
    const int hw = static_cast<int>(std::thread::hardware_concurrency());
    return hw > 0 ? hw : 1;
}

// Ordered parallel map over points.
template <typename F>
auto parallel_map(const std::vector<SweepPoint>& pts, int threads, F&& f) {
    using R = decltype(f(pts.front()));
    std::vector<R> out(pts.size());
    const int workers = worker_count(threads);
    std::size_t next = 0;
    while (next < pts.size()) {
        const std::size_t batch =
            std::min<std::size_t>(workers, pts.size() - next);
        std::vector<std::future<R>> futs;
        for (std::size_t i = 0; i < batch; ++i)
            futs.push_back(std::async(std::launch::async, f, pts[next + i]));
        for (std::size_t i = 0; i < batch; ++i) out[next + i] = futs[i].get();
        next += batch;
    }
    return out;
}

ResultRow base_row(const SweepPoint& pt) {
    ResultRow row;
    row.mode = pt.params.mode;
    row.g1 = pt.params.g1;
    row.g2 = pt.params.g2;
    row.q = pt.params.q;
    row.q1 = pt.params.q1;
    row.q2 = pt.params.q2;
    if (pt.arrivals) {
        row.lam1 = pt.arrivals->lam1;
        row.lam2 = pt.arrivals->lam2;
    }
    return row;
}

ResultRow analyze_point(const SweepPoint& pt, const SolverSpec& solver) {
    ResultRow row = base_row(pt);
    row.m = pt.m;
    row.provenance = Provenance::Analytic;
    try {
        if (pt.arrivals) {
            const UnsatFixedPointResult res =
                fixed_point_unsat(pt.params, *pt.arrivals, pt.m, solver.tol,
                                  solver.max_iter);
            row.converged = res.converged;
            row.iterations = res.iterations;
            if (res.converged) {
                const Metrics m = metrics_unsat(res);
                row.S = m.S;
                row.P = m.P;
                row.N_R = m.N_R;
                row.D = m.D;
            }
        } else {
            const FixedPointResult res = fixed_point(
                pt.params, pt.m, solver.tol, solver.max_iter);
            row.converged = res.converged;
            row.iterations = res.iterations;
            if (res.converged) {
                const Metrics m = metrics(res, coefficients(pt.params));
                row.S = m.S;
                row.P = m.P;
                row.N_R = m.N_R;
                row.D = m.D;
            }
        }
    } catch (const UnstableChainError&) {
        row.converged = false;
    }
    return row;
}

ResultRow simulate_point(const SweepPoint& pt, const SimSpec& sim, int threads) {
    SimConfig cfg;
    cfg.params = pt.params;
    cfg.arrivals = pt.arrivals;
    cfg.horizon = sim.horizon;
    cfg.warmup = sim.warmup;
    cfg.seed = sim.seed;
    cfg.replications = sim.replications;
    cfg.threads = threads;
    const SimMetrics m = simulate(cfg);

    ResultRow row = base_row(pt);
    row.provenance = Provenance::Simulated;
    row.S = m.S;
    row.P = m.P;
    row.N_R = m.N_R;
    row.D = m.D;
    row.converged = true;
    row.seed = sim.seed;
    row.slots = m.slots;
    if (m.replications > 1) {
        row.ci_S = m.ci_S;
        row.ci_P = m.ci_P;
        row.ci_D = m.ci_D;
    }
    return row;
}

void write_rows(const std::string& path, const char* header,
                const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write to '" + path + "'");
    out << header << '\n';
    for (const std::string& l : lines) out << l << '\n';
}

void print_summary(const std::vector<ResultRow>& rows) {
    std::printf("%-6s %-7s %-7s %-7s %-7s %-7s %-7s %-7s %-10s %-10s %-10s %-10s %s\n",
                "mode", "g1", "g2", "q", "q1", "q2", "lam1", "lam2", "S", "P", "N_R",
                "D", "conv");
    for (const ResultRow& r : rows) {
        auto lam = [](const std::optional<double>& v) {
            char buf[16];
            if (v)
                std::snprintf(buf, sizeof buf, "%-7.3f", *v);
            else
                std::snprintf(buf, sizeof buf, "%-7s", "-");
            return std::string(buf);
        };
        std::printf("%-6s %-7.3f %-7.3f %-7.3f %-7.3f %-7.3f %s %s %-10.5g "
                    "%-10.5g %-10.5g %-10.5g %s\n",
                    to_string(r.mode).c_str(), r.g1, r.g2, r.q, r.q1, r.q2,
                    lam(r.lam1).c_str(), lam(r.lam2).c_str(), r.S.value_or(0.0),
                    r.P.value_or(0.0), r.N_R.value_or(0.0), r.D.value_or(0.0),
                    r.converged ? "yes" : "NO");
    }
}

ProtocolParams params_from_config(const ExperimentConfig& cfg) {
    double g2 = cfg.g2.value_or(0.25);
    double g1 = cfg.g1 ? *cfg.g1 : cfg.k ? *cfg.k * g2 : 0.5;
    const double q = cfg.q.value_or(0.75);
    if (cfg.mode == Mode::NonNC) {
        if ((cfg.q1 && *cfg.q1 != q) || (cfg.q2 && *cfg.q2 != q))
            throw ConfigError("NonNC uses the single probability q; drop q1/q2");
        return ProtocolParams::non_nc(g1, g2, q);
    }
    return ProtocolParams::nc(g1, g2, q, cfg.q1.value_or(q), cfg.q2.value_or(q));
}

std::optional<ArrivalRates> arrivals_from_config(const ExperimentConfig& cfg) {
    if (!cfg.lam1 && !cfg.lam2) return std::nullopt;
    return ArrivalRates{cfg.lam1.value_or(0.0), cfg.lam2.value_or(0.0)};
}

}  // namespace

std::vector<SweepPoint> expand_points(const ExperimentConfig& cfg) {
    if (!cfg.preset.empty()) {
        Preset p = lookup_preset(cfg.preset);
        if (p.points.empty())
            throw ConfigError("preset '" + cfg.preset +
                              "' is a stability preset; use the stability command");
        return p.points;
    }

    SweepPoint base;
    base.params = params_from_config(cfg);
    base.arrivals = arrivals_from_config(cfg);
    base.m = cfg.solver.m;
    if (!cfg.sweep) return {base};

    const SweepSpec& sw = *cfg.sweep;
    if (!(sw.step > 0) || sw.stop < sw.start)
        throw ConfigError("sweep range is empty");
    std::vector<SweepPoint> pts;
    for (double v = sw.start; v < sw.stop + 0.5 * sw.step; v += sw.step) {
        SweepPoint pt = base;
        if (sw.variable == "g1") {
            pt.params.g1 = v;
        } else if (sw.variable == "g2") {
            pt.params.g2 = v;
            if (cfg.k) pt.params.g1 = *cfg.k * v;
        } else if (sw.variable == "q") {
            pt.params.q = v;
            if (pt.params.mode == Mode::NonNC) pt.params.q1 = pt.params.q2 = v;
        } else if (sw.variable == "q1") {
            pt.params.q1 = v;
        } else if (sw.variable == "q2") {
            pt.params.q2 = v;
        } else if (sw.variable == "q12") {
            pt.params.q1 = pt.params.q2 = v;
        } else if (sw.variable == "lam" || sw.variable == "lam1" ||
                   sw.variable == "lam2") {
            ArrivalRates a = pt.arrivals.value_or(ArrivalRates{});
            if (sw.variable != "lam2") a.lam1 = v;
            if (sw.variable != "lam1") a.lam2 = v;
            pt.arrivals = a;
        }
        validate_params(pt.params, pt.arrivals);  // range check per point
        pts.push_back(pt);
    }
    return pts;
}

int run_analyze(const ExperimentConfig& cfg) {
    const std::vector<SweepPoint> pts = expand_points(cfg);
    for (const SweepPoint& pt : pts)
        if (!pt.arrivals && pt.params.mode == Mode::NonNC)
            throw ConfigError(
                "saturated analytic metrics are NC-only; use the simulate command "
                "for NonNC");
    const SolverSpec solver = cfg.solver;
    const auto rows = parallel_map(pts, cfg.threads, [&](const SweepPoint& pt) {
        return analyze_point(pt, solver);
    });
    std::vector<std::string> lines;
    bool all_ok = true;
    for (const ResultRow& r : rows) {
        lines.push_back(r.to_line());
        all_ok = all_ok && r.converged;
    }
    write_rows(cfg.out_path, kResultHeader, lines);
    print_summary(rows);
    std::printf("wrote %zu rows to %s\n", lines.size(), cfg.out_path.c_str());
    return all_ok ? 0 : 2;
}

int run_simulate(const ExperimentConfig& cfg) {
    const std::vector<SweepPoint> pts = expand_points(cfg);
    std::vector<ResultRow> rows;
    for (const SweepPoint& pt : pts)
        rows.push_back(simulate_point(pt, cfg.sim, cfg.threads));
    std::vector<std::string> lines;
    for (const ResultRow& r : rows) lines.push_back(r.to_line());
    write_rows(cfg.out_path, kResultHeader, lines);
    print_summary(rows);
    std::printf("wrote %zu rows to %s\n", lines.size(), cfg.out_path.c_str());
    return 0;
}

int run_stability(const ExperimentConfig& cfg) {
    std::vector<StabilityCurve> curves;
    if (!cfg.preset.empty()) {
        Preset p = lookup_preset(cfg.preset);
        if (p.curves.empty())
            throw ConfigError("preset '" + cfg.preset +
                              "' is not a stability preset");
        curves = p.curves;
    } else {
        StabilityCurve c;
        c.params = params_from_config(cfg);
        c.m = cfg.solver.m;
        curves.push_back(c);
    }

    for (const StabilityCurve& curve : curves) {
        StabilityOptions opt;
        opt.m = curve.m;
        opt.lam1_start = cfg.stability.lam1_start;
        opt.lam1_step = cfg.stability.lam1_step;
        opt.lam2_step = cfg.stability.lam2_step;
        opt.lam1_max = cfg.stability.lam1_max;
        opt.epsilon = cfg.solver.epsilon;
        opt.threads = cfg.threads;
        const StabilityBoundary b = stability_boundary(curve.params, opt);

        std::string path = cfg.out_path;
        if (!curve.suffix.empty()) {
            const auto dot = path.rfind(".csv");
            if (dot != std::string::npos)
                path.insert(dot, curve.suffix);
            else
                path += curve.suffix;
        }
        std::vector<std::string> lines;
        for (const auto& [l1, l2] : b.points)
            lines.push_back(stability_line(l1, l2, b.m, b.epsilon, b.mode));
        write_rows(path, kStabilityHeader, lines);
        std::printf("%s: %zu frontier points -> %s\n",
                    to_string(curve.params.mode).c_str(), b.points.size(),
                    path.c_str());
    }
    return 0;
}

std::vector<SweepPoint> default_verify_grid(int m) {
    std::vector<SweepPoint> pts;
    for (double qi : {0.75, 0.4}) {
        for (double g2 : {0.1, 0.25, 0.4}) {
            SweepPoint pt;
            pt.params = ProtocolParams::nc(2 * g2, g2, 0.75, qi, qi);
            pt.m = m;
            pts.push_back(pt);
        }
    }
    return pts;
}

std::vector<VerifyOutcome> verify_grid(const std::vector<SweepPoint>& points,
                                       const SimSpec& sim, int oracle_cap,
                                       int threads, const VerifyTolerances& tol) {
    auto rel_gap = [](double a, double b) {
        return b != 0 ? std::abs(a / b - 1.0) : std::abs(a - b);
    };
    std::vector<VerifyOutcome> out;
    for (const SweepPoint& pt : points) {
        VerifyOutcome o;
        o.point = pt;

        const FixedPointResult res = fixed_point(pt.params, pt.m);
        o.analytic_converged = res.converged;
        o.analytic = metrics(res, coefficients(pt.params));

        const TruncatedChain chain =
            build_truncated(pt.params, pt.arrivals, oracle_cap);
        o.oracle = oracle_metrics(chain, solve_truncated(chain));

        SimConfig scfg;
        scfg.params = pt.params;
        scfg.arrivals = pt.arrivals;
        scfg.horizon = sim.horizon;
        scfg.warmup = sim.warmup;
        scfg.seed = sim.seed;
        scfg.replications = sim.replications;
        scfg.threads = threads;
        o.sim = simulate(scfg);

        o.pass_oracle = o.analytic_converged &&
                        rel_gap(o.analytic.S, o.oracle.S) <= tol.oracle_S &&
                        rel_gap(o.analytic.P, o.oracle.P) <= tol.oracle_P &&
                        rel_gap(o.analytic.D, o.oracle.D) <= tol.oracle_D;
        o.pass_sim = o.analytic_converged &&
                     rel_gap(o.analytic.S, o.sim.S) <= tol.sim_S &&
                     rel_gap(o.analytic.P, o.sim.P) <= tol.sim_P &&
                     rel_gap(o.analytic.D, o.sim.D) <= tol.sim_D;
        out.push_back(std::move(o));
    }
    return out;
}

int run_verify(const ExperimentConfig& cfg) {
    std::vector<SweepPoint> pts;
    if (cfg.grid == "default") {
        pts = default_verify_grid(cfg.solver.m);
    } else if (cfg.grid == "quick") {
        for (double qi : {0.75, 0.4}) {
            SweepPoint pt;
            pt.params = ProtocolParams::nc(0.5, 0.25, 0.75, qi, qi);
            pt.m = cfg.solver.m;
            pts.push_back(pt);
        }
    } else {
        throw ConfigError("unknown verify grid '" + cfg.grid + "'");
    }

    const auto outcomes = verify_grid(pts, cfg.sim, 40, cfg.threads);
    std::vector<std::string> lines;
    bool all_ok = true;
    std::printf("%-7s %-7s %-7s | %-9s %-9s %-9s | %-8s %-8s\n", "g2", "q1", "q2",
                "S(an)", "S(orc)", "S(sim)", "orc", "sim");
    for (const VerifyOutcome& o : outcomes) {
        ResultRow an = base_row(o.point);
        an.m = o.point.m;
        an.provenance = Provenance::Analytic;
        an.S = o.analytic.S;
        an.P = o.analytic.P;
        an.N_R = o.analytic.N_R;
        an.D = o.analytic.D;
        an.converged = o.analytic_converged;
        lines.push_back(an.to_line());

        ResultRow orc = base_row(o.point);
        orc.provenance = Provenance::Oracle;
        orc.S = o.oracle.S;
        orc.P = o.oracle.P;
        orc.N_R = o.oracle.N_R;
        orc.D = o.oracle.D;
        orc.converged = true;
        lines.push_back(orc.to_line());

        ResultRow sim = base_row(o.point);
        sim.provenance = Provenance::Simulated;
        sim.S = o.sim.S;
        sim.P = o.sim.P;
        sim.N_R = o.sim.N_R;
        sim.D = o.sim.D;
        sim.converged = true;
        sim.seed = cfg.sim.seed;
        sim.slots = o.sim.slots;
        sim.ci_S = o.sim.ci_S;
        sim.ci_P = o.sim.ci_P;
        sim.ci_D = o.sim.ci_D;
        lines.push_back(sim.to_line());

        std::printf("%-7.3f %-7.2f %-7.2f | %-9.5f %-9.5f %-9.5f | %-8s %-8s\n",
                    o.point.params.g2, o.point.params.q1, o.point.params.q2,
                    o.analytic.S, o.oracle.S, o.sim.S,
                    o.pass_oracle ? "ok" : "FAIL", o.pass_sim ? "ok" : "FAIL");
        all_ok = all_ok && o.pass_oracle && o.pass_sim;
    }
    write_rows(cfg.out_path, kResultHeader, lines);
    std::printf("triple agreement: %s (rows -> %s)\n", all_ok ? "ok" : "FAILED",
                cfg.out_path.c_str());
    return all_ok ? 0 : 2;
}

int run_experiment(const ExperimentConfig& cfg) {
    if (cfg.command == "analyze") return run_analyze(cfg);
    if (cfg.command == "simulate") return run_simulate(cfg);
    if (cfg.command == "stability") return run_stability(cfg);
    if (cfg.command == "verify") return run_verify(cfg);
    throw ConfigError("unknown command '" + cfg.command + "'");
}

}  // namespace twrn
