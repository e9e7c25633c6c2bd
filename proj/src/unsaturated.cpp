#include "twrn/unsaturated.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <thread>

#include "twrn/saturated.hpp"

namespace twrn {

const char* chain_name(UnsatChain c) {
    switch (c) {
        case UnsatChain::EndNode1: return "endnode1";
        case UnsatChain::VBuf1: return "vbuf1";
        case UnsatChain::VBuf2: return "vbuf2";
        case UnsatChain::EndNode2: return "endnode2";
    }
    return "?";
}

namespace {

CappedChainSpec unsat_capped_spec(const UnsatChainSpec& spec) {
    CappedChainSpec c;
    c.own_coord = static_cast<int>(spec.own);
    for (int coord = 0; coord < 4; ++coord) {
        if (coord == c.own_coord) continue;
        c.clipped.push_back({coord, spec.r_others[c.clipped.size()]});
    }
    c.m = spec.m;
    c.params = spec.params;
    c.arrivals = spec.arrivals;
    c.present = {true, true, true, true};
    return c;
}

}  // namespace

QbdBlocks build_unsat_chain(const UnsatChainSpec& spec) {
    auto [params, arrivals] = validate_params(spec.params, spec.arrivals);
    UnsatChainSpec s = spec;
    s.params = params;
    s.arrivals = *arrivals;
    return build_capped_chain(unsat_capped_spec(s));
}

UnsatFixedPointResult fixed_point_unsat(const ProtocolParams& raw,
                                        const ArrivalRates& raw_arrivals, int m,
                                        double tol, int max_iter, double r_init) {
    auto [params, arrivals] = validate_params(raw, raw_arrivals);
    if (m < 2) throw ValidationError("phase cap m must be at least 2");

    UnsatFixedPointResult res;
    res.params = params;
    res.arrivals = *arrivals;
    res.m = m;
    res.r.fill(r_init);

    auto solve_chain = [&](int own) {
        UnsatChainSpec spec;
        spec.own = static_cast<UnsatChain>(own);
        spec.m = m;
        spec.params = params;
        spec.arrivals = *arrivals;
        int slot = 0;
        for (int coord = 0; coord < 4; ++coord)
            if (coord != own) spec.r_others[slot++] = res.r[coord];
        try {
            return solve_qbd(build_unsat_chain(spec));
        } catch (const QbdInstabilityError&) {
            throw UnstableChainError(std::string("queue ") +
                                         chain_name(spec.own) + " is saturated",
                                     chain_name(spec.own));
        } catch (const UnstableChainError&) {
            throw UnstableChainError(std::string("queue ") +
                                         chain_name(spec.own) + " is saturated",
                                     chain_name(spec.own));
        }
    };

    for (int it = 1; it <= max_iter; ++it) {
        double delta = 0.0;
        for (int own = 0; own < 4; ++own) {
            res.sol[own] = solve_chain(own);
            const double r_new = conditional_probability(res.sol[own], m);
            delta = std::max(delta, std::abs(r_new - res.r[own]));
            res.r[own] = r_new;
        }
        res.iterations = it;
        res.final_delta = delta;
        res.delta_history.push_back(delta);
        if (delta < tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

Metrics metrics_unsat(const UnsatFixedPointResult& result) {
    if (!result.converged)
        throw Error("metrics require a converged fixed point");
    const int vb1 = static_cast<int>(UnsatChain::VBuf1);
    const int vb2 = static_cast<int>(UnsatChain::VBuf2);
    const QbdSolution& sol = result.sol[vb1];

    UnsatChainSpec spec;
    spec.own = UnsatChain::VBuf1;
    spec.m = result.m;
    spec.params = result.params;
    spec.arrivals = result.arrivals;
    int slot = 0;
    for (int coord = 0; coord < 4; ++coord)
        if (coord != vb1) spec.r_others[slot++] = result.r[coord];
    const CappedChainSpec capped = unsat_capped_spec(spec);
    const int P = phase_count(capped);

    const Eigen::RowVectorXd busy = tail_mass(sol, 1);
    Metrics m;
    // Phase digit 1 of the vbuf1 chain is the folded k2 coordinate; the
    // occupancy pattern of the two buffers is read from (level, that digit).
    for (int p = 0; p < P; ++p) {
        const bool k2_busy = phase_digit(capped, p, 1) > 0;
        if (k2_busy) {
            m.split.only2 += sol.pi0(p);
            m.split.both += busy(p);
        } else {
            m.split.both_empty += sol.pi0(p);
            m.split.only1 += busy(p);
        }
        const SlotRates empty_rates =
            slot_rates(representative_state(capped, 0, p), result.params,
                       result.arrivals);
        const SlotRates busy_rates =
            slot_rates(representative_state(capped, 1, p), result.params,
                       result.arrivals);
        m.S += sol.pi0(p) * empty_rates.success + busy(p) * busy_rates.success;
        m.P += sol.pi0(p) * empty_rates.tx + busy(p) * busy_rates.tx;
    }
    m.N_R = expected_level(result.sol[vb1]) + expected_level(result.sol[vb2]);
    if (m.S > 0) {
        m.D = m.N_R / m.S;
    } else if (m.N_R > 1e-12) {
        throw UndefinedDelayError("backlogged relay with zero throughput");
    } else {
        m.D = 0.0;
    }
    m.provenance = Provenance::Analytic;
    return m;
}

std::array<double, 2> end_node_occupancy(const UnsatFixedPointResult& result) {
    return {expected_level(result.sol[static_cast<int>(UnsatChain::EndNode1)]),
            expected_level(result.sol[static_cast<int>(UnsatChain::EndNode2)])};
}

UnsatFixedPointResult analytic_nonnc_chain(const ProtocolParams& raw,
                                           const ArrivalRates& arrivals, int m,
                                           double tol, int max_iter) {
    ProtocolParams p = raw;
    if (p.mode != Mode::NonNC)
        throw UnsupportedModeError("analytic_nonnc_chain expects NonNC parameters");
    return fixed_point_unsat(p, arrivals, m, tol, max_iter);
}

namespace {

// Dominant-system environment for the boundary tracer: one end node is held
// saturated, its buffer coordinate disappears, and the remaining three
// queues form chains with m^2 phases. The conditionals are indexed by
// coordinate; the saturated node's slot stays at 0.
struct Environment {
    std::array<double, 4> r{0.0, 0.5, 0.5, 0.5};
    bool free_node_saturated = false;  // the tracked end node cannot keep up
};

struct SaturatedQueue : Error {
    explicit SaturatedQueue(std::string which)
        : Error("queue " + which + " saturated"), queue(std::move(which)) {}
    std::string queue;
};

QbdBlocks build_env_chain(int own_coord, int saturated_node,
                          const ProtocolParams& params, double lam_free, int m,
                          const std::array<double, 4>& r) {
    const int dropped = saturated_node == 1 ? CoordL1 : CoordL2;
    CappedChainSpec c;
    c.own_coord = own_coord;
    for (int coord : {CoordL1, CoordK1, CoordK2, CoordL2})
        if (coord != own_coord && coord != dropped)
            c.clipped.push_back({coord, r[coord]});
    c.m = m;
    c.params = params;
    c.arrivals = saturated_node == 1 ? ArrivalRates{0.0, lam_free}
                                     : ArrivalRates{lam_free, 0.0};
    c.present = {true, true, true, true};
    c.present[dropped] = false;
    return build_capped_chain(c);
}

// Fixed point over the three environment chains with end node
// `saturated_node` held saturated and the other end node fed at lam_free.
// A saturated relay buffer raises SaturationOrderError; a saturated free
// end node only sets the flag (its conditional is pinned at 0).
Environment solve_environment(const ProtocolParams& params, int saturated_node,
                              double lam_free, int m, const StabilityOptions& opt) {
    const int free_coord = saturated_node == 1 ? CoordL2 : CoordL1;
    const std::array<int, 3> own_coords =
        saturated_node == 1 ? std::array<int, 3>{CoordK1, CoordK2, CoordL2}
                            : std::array<int, 3>{CoordL1, CoordK1, CoordK2};
    Environment env;

    auto update_chain = [&](int own) -> bool {  // false = chain saturated
        const QbdBlocks blocks =
            build_env_chain(own, saturated_node, params, lam_free, m, env.r);
        try {
            QbdSolution sol = solve_qbd(blocks, opt.solver_tol, opt.solver_max_iter);
            env.r[own] = conditional_probability(sol, m);
            return env.r[own] >= opt.epsilon;
        } catch (const QbdInstabilityError&) {
            return false;
        } catch (const UnstableChainError&) {
            return false;
        }
    };

    for (int it = 1; it <= opt.fp_max_iter; ++it) {
        const std::array<double, 4> before = env.r;
        for (int own : own_coords) {
            if (own == free_coord && env.free_node_saturated) continue;
            if (!update_chain(own)) {
                if (own == free_coord) {
                    // The tracked end node saturates in this environment;
                    // freeze it at the saturated limit and keep going.
                    env.free_node_saturated = true;
                    env.r[own] = 0.0;
                } else {
                    throw SaturatedQueue(own == CoordK1 ? "vbuf1" : "vbuf2");
                }
            }
        }
        double delta = 0.0;
        for (int c = 0; c < 4; ++c)
            delta = std::max(delta, std::abs(env.r[c] - before[c]));
        if (delta < opt.fp_tol) return env;
    }
    throw Error("environment fixed point did not converge");
}

// Full-box chain of one end node's own queue at (lam1, lam2), phases fed
// with the conditionals of that node's dominant-system environment.
QbdBlocks build_test_chain(int node, const ProtocolParams& params,
                           const Environment& env, double lam1, double lam2,
                           int m) {
    CappedChainSpec c;
    c.own_coord = node == 1 ? CoordL1 : CoordL2;
    for (int coord : {CoordL1, CoordK1, CoordK2, CoordL2})
        if (coord != c.own_coord) c.clipped.push_back({coord, env.r[coord]});
    c.m = m;
    c.params = params;
    c.arrivals = ArrivalRates{lam1, lam2};
    c.present = {true, true, true, true};
    return build_capped_chain(c);
}

struct TracePoint {
    bool stop = false;  // end node 1 saturated, or no feasible lam2 remains
    double lam2 = 0.0;
};

// One frontier point. A pair (lam1, lam2) is inside the region when it is
// stable in at least one of the two dominant systems: in S2 end node 2 is
// saturated and node 2's own queue is the one under test; S1 is the mirror
// image. Within each system, mean drift <= 0 stands in for sp(R) >= 1, and
// the accepted frontier point additionally carries a converged conditional
// probability >= epsilon for the tested chain. A rate-matrix solve that
// exhausts its iteration budget sits within O(|log tol| / max_iter) of
// critical, where the conditional probability is below epsilon anyway, so it
// counts as saturated.
TracePoint trace_point(const ProtocolParams& params, double lam1,
                       const StabilityOptions& opt) {
    TracePoint out;
    // S2 environment: independent of lam2, reused across the search.
    const Environment env2 = solve_environment(params, 2, lam1, opt.m, opt);

    // S1 environments depend on the probed lam2; solved on demand.
    auto node1_env = [&](double lam2) {
        return solve_environment(params, 1, lam2, opt.m, opt);
    };
    auto r_certified = [&](const QbdBlocks& blocks) {
        try {
            QbdSolution sol = solve_qbd(blocks, opt.solver_tol, opt.solver_max_iter);
            return conditional_probability(sol, opt.m) >= opt.epsilon;
        } catch (const QbdInstabilityError&) {
            return false;
        } catch (const UnstableChainError&) {
            return false;
        }
    };
    // exact = false: drift tests only (cheap, used to bracket);
    // exact = true: converged conditional probabilities (the frontier
    // certificate).
    auto in_region = [&](long j, bool exact) {
        const double lam2 = j * opt.lam2_step;
        if (!env2.free_node_saturated) {
            const QbdBlocks test2 = build_test_chain(2, params, env2, lam1, lam2, opt.m);
            if (mean_drift(test2) > 0 && (!exact || r_certified(test2)))
                return true;
        }
        const Environment env1 = node1_env(lam2);
        if (env1.free_node_saturated) return false;
        const QbdBlocks test1 = build_test_chain(1, params, env1, lam1, lam2, opt.m);
        return mean_drift(test1) > 0 && (!exact || r_certified(test1));
    };

    const long j_max = std::lround(std::floor(opt.lam2_max / opt.lam2_step));
    if (!in_region(1, false)) {
        out.stop = true;  // nothing left of the frontier at this lam1
        return out;
    }
    long lo = 1, hi = 2;
    while (hi <= j_max && in_region(hi, false)) {
        lo = hi;
        hi *= 2;
    }
    if (hi <= j_max) {
        while (hi - lo > 1) {
            const long mid = lo + (hi - lo) / 2;
            if (in_region(mid, false)) lo = mid; else hi = mid;
        }
    } else {
        lo = j_max;
    }
    // Walk down to the largest grid point that passes the exact test; it
    // sits at most a couple of steps inside the drift frontier.
    for (long j = lo; j >= 1; --j) {
        if (in_region(j, true)) {
            out.lam2 = j * opt.lam2_step;
            return out;
        }
    }
    out.stop = true;
    return out;
}

}  // namespace

StabilityBoundary stability_boundary(const ProtocolParams& raw,
                                     const StabilityOptions& opt) {
    auto [params, none] = validate_params(raw);
    if (opt.m < 2) throw ValidationError("phase cap m must be at least 2");

    StabilityBoundary boundary;
    boundary.m = opt.m;
    boundary.epsilon = opt.epsilon;
    boundary.step = opt.lam2_step;
    boundary.mode = params.mode;
    boundary.params = params;

    int workers = opt.threads > 0
                      ? opt.threads
                      : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;

    double lam1 = opt.lam1_start;
    bool stopped = false;
    while (!stopped && lam1 < opt.lam1_max) {
        std::vector<double> batch;
        for (int i = 0; i < workers && lam1 < opt.lam1_max; ++i) {
            batch.push_back(lam1);
            lam1 += opt.lam1_step;
        }
        std::vector<std::future<TracePoint>> futs;
        futs.reserve(batch.size());
        for (double l1 : batch)
            futs.push_back(std::async(std::launch::async, trace_point, params, l1,
                                      opt));
        for (std::size_t i = 0; i < futs.size(); ++i) {
            TracePoint tp;
            try {
                tp = futs[i].get();
            } catch (const SaturatedQueue& s) {
                throw SaturationOrderError(
                    "relay " + s.queue + " saturates before the end nodes at lam1=" +
                    std::to_string(batch[i]) + "; pick q, q1, q2 above g1 and g2");
            }
            if (tp.stop) {
                stopped = true;
                break;
            }
            boundary.points.emplace_back(batch[i], tp.lam2);
        }
    }
    for (std::size_t i = 1; i < boundary.points.size(); ++i) {
        if (boundary.points[i].second > boundary.points[i - 1].second + 1e-12)
            std::fprintf(stderr,
                         "warning: frontier not monotone at lam1=%.4f "
                         "(lam2 %.4f -> %.4f)\n",
                         boundary.points[i].first, boundary.points[i - 1].second,
                         boundary.points[i].second);
    }
    return boundary;
}

}  // namespace twrn
