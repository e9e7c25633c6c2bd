#include <doctest.h>

#include <cmath>

#include "twrn/oracle.hpp"
#include "twrn/simulator.hpp"

using namespace twrn;

namespace {

const ProtocolParams kWorkingPoint = ProtocolParams::nc(0.5, 0.25, 0.75, 0.4, 0.4);

bool same_metrics(const SimMetrics& a, const SimMetrics& b) {
    return a.S == b.S && a.P == b.P && a.N_R == b.N_R && a.D == b.D &&
           a.deliveries == b.deliveries && a.relay_attempts == b.relay_attempts &&
           a.uplink_collisions == b.uplink_collisions;
}

}  // namespace

TEST_CASE("silent network produces nothing") {
    SimConfig cfg;
    cfg.params = ProtocolParams::nc(0, 0, 0, 0, 0);
    cfg.horizon = 50'000;
    const SimMetrics m = simulate(cfg);
    CHECK(m.S == 0.0);
    CHECK(m.P == 0.0);
    CHECK(m.deliveries == 0);
    CHECK(m.relay_attempts == 0);
    CHECK(m.uplink_collisions == 0);
    CHECK(m.N_R == 0.0);
}

TEST_CASE("determinism and the replication seed scheme") {
    SimConfig cfg;
    cfg.params = kWorkingPoint;
    cfg.horizon = 200'000;
    cfg.seed = 99;

    const SimMetrics a = simulate(cfg);
    const SimMetrics b = simulate(cfg);
    CHECK(same_metrics(a, b));

    cfg.replications = 2;
    const SimMetrics merged = replicate(cfg);
    REQUIRE(merged.per_rep.size() == 2);
    // Replication 0 uses sub_seed(seed, 0), identical to the single run.
    CHECK(same_metrics(merged.per_rep[0], a));
    CHECK(sub_seed(99, 0) != sub_seed(99, 1));

    SUBCASE("merged estimates are plain averages") {
        CHECK(merged.S ==
              doctest::Approx(0.5 * (merged.per_rep[0].S + merged.per_rep[1].S))
                  .epsilon(1e-15));
        CHECK(merged.deliveries ==
              merged.per_rep[0].deliveries + merged.per_rep[1].deliveries);
    }
}

TEST_CASE("window accounting identities") {
    SimConfig cfg;
    cfg.params = kWorkingPoint;
    cfg.horizon = 300'000;
    cfg.seed = 1234;
    const SimMetrics m = simulate(cfg);

    CHECK(m.slots == cfg.horizon - cfg.horizon / 10);  // default warmup
    CHECK(m.deliveries == llround(m.S * static_cast<double>(m.slots)));
    CHECK(m.relay_attempts == llround(m.P * static_cast<double>(m.slots)));

    SUBCASE("per-buffer conservation over the full run") {
        for (int qi : {CoordK1, CoordK2})
            CHECK(m.queues[qi].received ==
                  m.queues[qi].delivered + m.queues[qi].final_len);
    }
    SUBCASE("relay attempt fractions track the configured probabilities") {
        auto binom_ci = [](double p, long long n) {
            return 3.0 * std::sqrt(p * (1 - p) / static_cast<double>(n));
        };
        const double f_both = static_cast<double>(m.attempts_both_busy) /
                              static_cast<double>(m.slots_both_busy);
        CHECK(std::abs(f_both - kWorkingPoint.q) <
              binom_ci(kWorkingPoint.q, m.slots_both_busy));
        const double f1 = static_cast<double>(m.attempts_only1) /
                          static_cast<double>(m.slots_only1);
        CHECK(std::abs(f1 - kWorkingPoint.q1) <
              binom_ci(kWorkingPoint.q1, m.slots_only1));
        const double f2 = static_cast<double>(m.attempts_only2) /
                          static_cast<double>(m.slots_only2);
        CHECK(std::abs(f2 - kWorkingPoint.q2) <
              binom_ci(kWorkingPoint.q2, m.slots_only2));
    }
}

TEST_CASE("single-queue system matches the exact chain") {
    // g2 = 0 silences node 2 entirely.
    const ProtocolParams p = ProtocolParams::nc(0.5, 0.0, 0.75, 0.5, 0.5);
    const TruncatedChain chain = build_truncated(p, std::nullopt, 40);
    const Metrics om = oracle_metrics(chain, solve_truncated(chain));

    SimConfig cfg;
    cfg.params = p;
    cfg.horizon = 1'000'000;
    cfg.seed = 31337;
    cfg.replications = 4;
    const SimMetrics sm = simulate(cfg);
    CHECK(std::abs(sm.S - om.S) < 2 * sm.ci_S + 1e-4);
    CHECK(std::abs(sm.P - om.P) < 2 * sm.ci_P + 1e-4);
}

TEST_CASE("empirical Little's law within the joint confidence band") {
    SimConfig cfg;
    cfg.params = kWorkingPoint;
    cfg.horizon = 500'000;
    cfg.seed = 777;
    cfg.replications = 4;
    const SimMetrics m = simulate(cfg);
    const double bound = m.ci_NR + m.D * m.ci_S + m.S * m.ci_D + 1e-3;
    CHECK(std::abs(m.D * m.S - m.N_R) < bound);
}

TEST_CASE("confidence intervals shrink with replications") {
    SimConfig cfg;
    cfg.params = kWorkingPoint;
    cfg.horizon = 100'000;
    cfg.seed = 2024;

    cfg.replications = 4;
    const SimMetrics m4 = replicate(cfg);
    cfg.replications = 64;
    const SimMetrics m64 = replicate(cfg);
    REQUIRE(m4.ci_S > 0.0);
    REQUIRE(m64.ci_S > 0.0);
    // Expected ratio is 4 with heavy small-sample noise on the df=3 estimate.
    const double ratio = m4.ci_S / m64.ci_S;
    CHECK(ratio > 1.5);
    CHECK(ratio < 10.0);
}

TEST_CASE("drift test verdicts") {
    SimConfig cfg;
    cfg.params = ProtocolParams::nc(0.5, 0.5, 0.7, 0.4, 0.4);
    cfg.horizon = 400'000;
    cfg.seed = 31415;
    cfg.replications = 3;

    SUBCASE("no arrivals, no drift") {
        cfg.arrivals = ArrivalRates{0.0, 0.0};
        const DriftVerdict v = drift_test(cfg);
        CHECK_FALSE(v.any_unstable);
    }
    SUBCASE("stable interior point") {
        cfg.arrivals = ArrivalRates{0.08, 0.08};
        const DriftVerdict v = drift_test(cfg);
        CHECK_FALSE(v.any_unstable);
    }
    SUBCASE("overload is detected") {
        cfg.arrivals = ArrivalRates{0.45, 0.45};
        const DriftVerdict v = drift_test(cfg);
        CHECK(v.any_unstable);
    }
    SUBCASE("saturated runs are rejected") {
        cfg.arrivals.reset();
        CHECK_THROWS_AS(drift_test(cfg), ValidationError);
    }
}

TEST_CASE("unsaturated bookkeeping") {
    SimConfig cfg;
    cfg.params = ProtocolParams::nc(0.5, 0.5, 0.7, 0.4, 0.4);
    cfg.arrivals = ArrivalRates{0.1, 0.1};
    cfg.horizon = 400'000;
    cfg.seed = 112;
    const SimMetrics m = simulate(cfg);

    for (int qi = 0; qi < 4; ++qi)
        CHECK(m.queues[qi].received == m.queues[qi].delivered + m.queues[qi].final_len);
    CHECK(m.end_node_delay > 0.0);
    CHECK(m.S == doctest::Approx(0.2).epsilon(0.05));

    SUBCASE("configuration errors") {
        cfg.warmup = cfg.horizon;
        CHECK_THROWS_AS(simulate(cfg), ValidationError);
        cfg.warmup = -1;
        cfg.replications = 0;
        CHECK_THROWS_AS(simulate(cfg), ValidationError);
        cfg.replications = 1;
        CHECK_THROWS_AS(replicate(cfg), ValidationError);
    }
}
