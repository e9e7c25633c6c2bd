#include "twrn/simulator.hpp"

#include <cmath>

#include "twrn/slot_model.hpp"
#include <deque>
#include <future>
#include <random>
#include <thread>

namespace twrn {

std::uint64_t sub_seed(std::uint64_t base, int replication) {
    std::uint64_t z = base + static_cast<std::uint64_t>(replication) *
                                 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace {

// Deterministic uniform in [0,1) from the top 53 bits, identical across
// platforms.
inline double uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Accumulates a least-squares slope from up to ~4096 evenly spaced samples.
struct SlopeTracker {
    long long every = 1;
    double n = 0, st = 0, stt = 0, sq = 0, stq = 0;

    void init(long long window) { every = window > 4096 ? window / 4096 : 1; }
    void add(long long t, long long q) {
        if (t % every) return;
        const double td = static_cast<double>(t) / static_cast<double>(every);
        n += 1;
        st += td;
        stt += td * td;
        sq += static_cast<double>(q);
        stq += td * static_cast<double>(q);
    }
    double slope() const {
        const double det = n * stt - st * st;
        if (det <= 0) return 0.0;
        return (n * stq - st * sq) / det / static_cast<double>(every);
    }
};

double t_quantile_975(int df) {
    static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447,
                                   2.365,  2.306, 2.262, 2.228, 2.201, 2.179,
                                   2.160,  2.145, 2.131, 2.120, 2.110, 2.101,
                                   2.093,  2.086, 2.080, 2.074, 2.069, 2.064,
                                   2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
    if (df < 1) return 0.0;
    if (df <= 30) return table[df - 1];
    return 1.96;
}

SimMetrics run_one(const SimConfig& cfg, int replication) {
    const auto [params, arrivals] = validate_params(cfg.params, cfg.arrivals);
    if (cfg.horizon <= 0) throw ValidationError("horizon must be positive");
    long long warmup = cfg.warmup;
    if (warmup < 0) warmup = cfg.horizon / 10;
    if (warmup >= cfg.horizon)
        throw ValidationError("warmup must be smaller than the horizon");
    const long long window = cfg.horizon - warmup;

    std::mt19937_64 rng(sub_seed(cfg.seed, replication));
    const bool unsat = arrivals.has_value();
    const double lam1 = unsat ? arrivals->lam1 : 0.0;
    const double lam2 = unsat ? arrivals->lam2 : 0.0;
    const bool nc = params.mode == Mode::NC;

    long long l1 = 0, l2 = 0, k1 = 0, k2 = 0;
    std::deque<long long> vq1, vq2;      // arrival slots at the relay
    std::deque<long long> eq1, eq2;      // arrival slots at the end nodes
    std::array<QueueTrace, 4> queues{};
    std::array<SlopeTracker, 4> slopes{};
    for (auto& s : slopes) s.init(window);

    long long relay_attempts = 0, coded_attempts = 0, deliveries = 0;
    long long uplink_attempts = 0, uplink_received = 0;
    long long m_slots_both = 0, m_att_both = 0;
    long long m_slots_only1 = 0, m_att_only1 = 0;
    long long m_slots_only2 = 0, m_att_only2 = 0;
    double occupancy_sum = 0.0;
    double delay_sum = 0.0;
    long long delay_count = 0;
    double node_delay_sum = 0.0;
    long long node_delay_count = 0;
    std::array<double, 4> mean_sum{};

    for (long long t = 0; t < cfg.horizon; ++t) {
        const double u1 = uniform(rng);
        const double u2 = uniform(rng);
        const double ur = uniform(rng);
        const double upick = uniform(rng);
        const double ua1 = uniform(rng);
        const double ua2 = uniform(rng);

        const bool backlog1 = unsat ? l1 > 0 : true;
        const bool backlog2 = unsat ? l2 > 0 : true;
        const bool t1 = backlog1 && u1 < params.g1;
        const bool t2 = backlog2 && u2 < params.g2;

        double p_relay = 0.0;
        if (k1 > 0 && k2 > 0)
            p_relay = params.q;
        else if (k1 > 0)
            p_relay = params.q1;
        else if (k2 > 0)
            p_relay = params.q2;
        const bool tr = ur < p_relay;
        const bool in_window = t >= warmup;

        if (in_window) {
            uplink_attempts += (t1 ? 1 : 0) + (t2 ? 1 : 0);
            if (k1 > 0 && k2 > 0) {
                ++m_slots_both;
                m_att_both += tr;
            } else if (k1 > 0) {
                ++m_slots_only1;
                m_att_only1 += tr;
            } else if (k2 > 0) {
                ++m_slots_only2;
                m_att_only2 += tr;
            }
        }

        if (tr) {
            if (in_window) {
                ++relay_attempts;
                if (nc && k1 > 0 && k2 > 0) ++coded_attempts;
            }
            bool from1, from2;
            if (k1 > 0 && k2 > 0) {
                if (nc) {
                    from1 = from2 = true;
                } else {
                    from1 = upick < 0.5;
                    from2 = !from1;
                }
            } else {
                from1 = k1 > 0;
                from2 = k2 > 0;
            }
            if (from1 && !t2) {
                --k1;
                ++queues[CoordK1].delivered;
                const long long born = vq1.front();
                vq1.pop_front();
                if (in_window) {
                    ++deliveries;
                    delay_sum += static_cast<double>(t - born);
                    ++delay_count;
                }
            }
            if (from2 && !t1) {
                --k2;
                ++queues[CoordK2].delivered;
                const long long born = vq2.front();
                vq2.pop_front();
                if (in_window) {
                    ++deliveries;
                    delay_sum += static_cast<double>(t - born);
                    ++delay_count;
                }
            }
        } else {
            // Relay quiet: an uncontested end-node transmission is received.
            if (t1 && !t2) {
                ++k1;
                ++queues[CoordK1].received;
                vq1.push_back(t);
                if (in_window) ++uplink_received;
                if (unsat) {
                    --l1;
                    ++queues[CoordL1].delivered;
                    const long long born = eq1.front();
                    eq1.pop_front();
                    if (in_window) {
                        node_delay_sum += static_cast<double>(t - born);
                        ++node_delay_count;
                    }
                }
            }
            if (t2 && !t1) {
                ++k2;
                ++queues[CoordK2].received;
                vq2.push_back(t);
                if (in_window) ++uplink_received;
                if (unsat) {
                    --l2;
                    ++queues[CoordL2].delivered;
                    const long long born = eq2.front();
                    eq2.pop_front();
                    if (in_window) {
                        node_delay_sum += static_cast<double>(t - born);
                        ++node_delay_count;
                    }
                }
            }
        }

        if (unsat) {
            if (ua1 < lam1) {
                ++l1;
                ++queues[CoordL1].received;
                eq1.push_back(t);
            }
            if (ua2 < lam2) {
                ++l2;
                ++queues[CoordL2].received;
                eq2.push_back(t);
            }
        }

        if (in_window) {
            occupancy_sum += static_cast<double>(k1 + k2);
            mean_sum[CoordL1] += static_cast<double>(l1);
            mean_sum[CoordK1] += static_cast<double>(k1);
            mean_sum[CoordK2] += static_cast<double>(k2);
            mean_sum[CoordL2] += static_cast<double>(l2);
            const long long tw = t - warmup;
            slopes[CoordL1].add(tw, l1);
            slopes[CoordK1].add(tw, k1);
            slopes[CoordK2].add(tw, k2);
            slopes[CoordL2].add(tw, l2);
        }
    }

    SimMetrics m;
    m.slots = window;
    m.relay_attempts = relay_attempts;
    m.coded_attempts = coded_attempts;
    m.uplink_collisions = uplink_attempts - uplink_received;
    m.deliveries = deliveries;
    m.slots_both_busy = m_slots_both;
    m.attempts_both_busy = m_att_both;
    m.slots_only1 = m_slots_only1;
    m.attempts_only1 = m_att_only1;
    m.slots_only2 = m_slots_only2;
    m.attempts_only2 = m_att_only2;
    m.S = static_cast<double>(deliveries) / static_cast<double>(window);
    m.P = static_cast<double>(relay_attempts) / static_cast<double>(window);
    m.N_R = occupancy_sum / static_cast<double>(window);
    m.D = delay_count > 0 ? delay_sum / static_cast<double>(delay_count) : 0.0;
    m.end_node_delay =
        node_delay_count > 0 ? node_delay_sum / static_cast<double>(node_delay_count)
                             : 0.0;
    for (int qi = 0; qi < 4; ++qi) {
        queues[qi].mean = mean_sum[qi] / static_cast<double>(window);
        queues[qi].drift_slope = slopes[qi].slope();
    }
    queues[CoordL1].final_len = l1;
    queues[CoordL2].final_len = l2;
    queues[CoordK1].final_len = k1;
    queues[CoordK2].final_len = k2;
    m.queues = queues;
    m.replications = 1;
    return m;
}

}  // namespace

SimMetrics replicate(const SimConfig& cfg) {
    if (cfg.replications < 2)
        throw ValidationError("replicate requires at least 2 replications");
    int workers = cfg.threads > 0 ? cfg.threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;

    std::vector<SimMetrics> reps(cfg.replications);
    int next = 0;
    while (next < cfg.replications) {
        std::vector<std::future<SimMetrics>> futs;
        const int batch = std::min(workers, cfg.replications - next);
        for (int i = 0; i < batch; ++i)
            futs.push_back(
                std::async(std::launch::async, run_one, cfg, next + i));
        for (int i = 0; i < batch; ++i) reps[next + i] = futs[i].get();
        next += batch;
    }

    const int n = cfg.replications;
    SimMetrics merged;
    auto combine = [&](auto get, double& mean_out, double* ci_out) {
        double mean = 0;
        for (const auto& r : reps) mean += get(r);
        mean /= n;
        double var = 0;
        for (const auto& r : reps) var += (get(r) - mean) * (get(r) - mean);
        var /= (n - 1);
        mean_out = mean;
        if (ci_out) *ci_out = t_quantile_975(n - 1) * std::sqrt(var / n);
    };
    combine([](const SimMetrics& r) { return r.S; }, merged.S, &merged.ci_S);
    combine([](const SimMetrics& r) { return r.P; }, merged.P, &merged.ci_P);
    combine([](const SimMetrics& r) { return r.N_R; }, merged.N_R, &merged.ci_NR);
    combine([](const SimMetrics& r) { return r.D; }, merged.D, &merged.ci_D);
    combine([](const SimMetrics& r) { return r.end_node_delay; },
            merged.end_node_delay, nullptr);
    for (const auto& r : reps) {
        merged.slots += r.slots;
        merged.relay_attempts += r.relay_attempts;
        merged.coded_attempts += r.coded_attempts;
        merged.uplink_collisions += r.uplink_collisions;
        merged.deliveries += r.deliveries;
        merged.slots_both_busy += r.slots_both_busy;
        merged.attempts_both_busy += r.attempts_both_busy;
        merged.slots_only1 += r.slots_only1;
        merged.attempts_only1 += r.attempts_only1;
        merged.slots_only2 += r.slots_only2;
        merged.attempts_only2 += r.attempts_only2;
        for (int qi = 0; qi < 4; ++qi) {
            merged.queues[qi].mean += r.queues[qi].mean / n;
            merged.queues[qi].drift_slope += r.queues[qi].drift_slope / n;
            merged.queues[qi].received += r.queues[qi].received;
            merged.queues[qi].delivered += r.queues[qi].delivered;
            merged.queues[qi].final_len += r.queues[qi].final_len;
        }
    }
    merged.replications = n;
    merged.per_rep = std::move(reps);
    return merged;
}

SimMetrics simulate(const SimConfig& cfg) {
    if (cfg.replications < 1)
        throw ValidationError("replications must be at least 1");
    if (cfg.replications == 1) return run_one(cfg, 0);
    return replicate(cfg);
}

DriftVerdict drift_test(const SimConfig& cfg, double slope_threshold) {
    if (!cfg.arrivals)
        throw ValidationError("drift_test requires an unsaturated configuration");
    SimConfig c = cfg;
    if (c.replications < 1) c.replications = 1;
    SimMetrics m = simulate(c);
    std::vector<SimMetrics> singleton;
    const std::vector<SimMetrics>* reps = &m.per_rep;
    if (m.per_rep.empty()) {
        singleton.push_back(m);
        reps = &singleton;
    }

    DriftVerdict v;
    for (int qi = 0; qi < 4; ++qi) {
        int votes = 0;
        for (const auto& r : *reps)
            if (r.queues[qi].drift_slope > slope_threshold) ++votes;
        v.unstable[qi] = 2 * votes > static_cast<int>(reps->size());
        v.any_unstable = v.any_unstable || v.unstable[qi];
    }
    return v;
}

}  // namespace twrn
