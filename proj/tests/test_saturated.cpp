#include <doctest.h>

#include <random>

#include "twrn/oracle.hpp"
#include "twrn/saturated.hpp"
#include "twrn/simulator.hpp"

using namespace twrn;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;

namespace {

const ProtocolParams kCoeffPoint = ProtocolParams::nc(0.5, 0.25, 0.75, 0.45, 0.35);
const ProtocolParams kWorkingPoint = ProtocolParams::nc(0.5, 0.25, 0.75, 0.4, 0.4);

DistributedChainSpec spec_for(int buffer, int m, double r,
                              const ProtocolParams& p) {
    DistributedChainSpec s;
    s.own_buffer = buffer;
    s.m = m;
    s.r_other = r;
    s.params = p;
    return s;
}

}  // namespace

TEST_CASE("clipped-transition entries of the buffer-1 chain") {
    const auto c = coefficients(kCoeffPoint);
    const QbdBlocks b = build_distributed_chain(spec_for(1, 4, 0.6, kCoeffPoint));

    // Level down while the folded coordinate stays at the cap.
    CHECK(b.A2(3, 3) == doctest::Approx(0.39375).epsilon(1e-13));
    CHECK(b.A2(3, 3) == doctest::Approx(c.mu1 + 0.4 * c.mu).epsilon(1e-13));
    // Level down with the folded coordinate resolved to exactly m-1.
    CHECK(b.A2(3, 2) == doctest::Approx(c.mu * 0.6).epsilon(1e-13));
    // Same level, folded coordinate served.
    CHECK(b.A1(3, 2) == doctest::Approx(c.mu2 * 0.6).epsilon(1e-13));
    // Below the cap nothing is split.
    CHECK(b.A2(1, 0) == doctest::Approx(c.mu).epsilon(1e-13));
    CHECK(b.A2(1, 1) == doctest::Approx(c.mu1).epsilon(1e-13));
    // Boundary: native service of buffer 2 at the cap.
    CHECK(b.B00(3, 2) == doctest::Approx(c.mu22 * 0.6).epsilon(1e-13));

    SUBCASE("down and sideways mass is conserved under the split") {
        const QbdBlocks lo = build_distributed_chain(spec_for(1, 4, 0.3, kCoeffPoint));
        const QbdBlocks hi = build_distributed_chain(spec_for(1, 4, 0.9, kCoeffPoint));
        CHECK(lo.A2(3, 3) + lo.A2(3, 2) ==
              doctest::Approx(c.mu1 + c.mu).epsilon(1e-13));
        CHECK(hi.A2(3, 3) + hi.A2(3, 2) ==
              doctest::Approx(c.mu1 + c.mu).epsilon(1e-13));
        CHECK(lo.A1(3, 3) + lo.A1(3, 2) ==
              doctest::Approx(hi.A1(3, 3) + hi.A1(3, 2)).epsilon(1e-13));
    }
}

TEST_CASE("inactive clipping matches the exact truncated chain") {
    // With r_other = 1 the folded coordinate behaves exactly like the full
    // chain truncated to the phase box with a reflecting cap.
    const int m = 4;
    const QbdBlocks b = build_distributed_chain(spec_for(1, m, 1.0, kCoeffPoint));
    const TruncatedChain oracle = build_truncated(kCoeffPoint, std::nullopt, m - 1);
    const MatrixXd dense = MatrixXd(oracle.P);

    for (int phase = 0; phase < m; ++phase) {
        for (int to = 0; to < m; ++to) {
            CHECK(b.B00(phase, to) ==
                  doctest::Approx(dense(oracle.index(NetworkState::saturated(0, phase)),
                                        oracle.index(NetworkState::saturated(0, to))))
                      .epsilon(1e-13));
            CHECK(b.A1(phase, to) ==
                  doctest::Approx(dense(oracle.index(NetworkState::saturated(1, phase)),
                                        oracle.index(NetworkState::saturated(1, to))))
                      .epsilon(1e-13));
            CHECK(b.A2(phase, to) ==
                  doctest::Approx(dense(oracle.index(NetworkState::saturated(1, phase)),
                                        oracle.index(NetworkState::saturated(0, to))))
                      .epsilon(1e-13));
        }
    }
}

TEST_CASE("chain builder accepts random parameter draws") {
    std::mt19937_64 rng(8101);
    std::uniform_real_distribution<> u(0.0, 1.0);
    for (int draw = 0; draw < 200; ++draw) {
        const ProtocolParams p =
            ProtocolParams::nc(u(rng), u(rng), u(rng), u(rng), u(rng));
        // validate_blocks runs inside the builder and enforces stochasticity.
        CHECK_NOTHROW(build_distributed_chain(spec_for(1 + draw % 2, 4, u(rng), p)));
    }
    CHECK_THROWS_AS(build_distributed_chain(spec_for(1, 1, 0.5, kCoeffPoint)),
                    ValidationError);
    CHECK_THROWS_AS(build_distributed_chain(spec_for(3, 4, 0.5, kCoeffPoint)),
                    ValidationError);
}

TEST_CASE("conditional probability") {
    SUBCASE("scalar geometric chain") {
        QbdBlocks b;
        b.A0 = MatrixXd::Constant(1, 1, 0.2);
        b.A1 = MatrixXd::Constant(1, 1, 0.5);
        b.A2 = MatrixXd::Constant(1, 1, 0.3);
        b.B00 = MatrixXd::Constant(1, 1, 0.8);
        b.B01 = MatrixXd::Constant(1, 1, 0.2);
        b.B10 = MatrixXd::Constant(1, 1, 0.3);
        const QbdSolution sol = solve_qbd(b, 1e-14);
        CHECK(conditional_probability(sol, 4) ==
              doctest::Approx(1.0 / 3.0).epsilon(1e-10));
    }
    SUBCASE("empty tail returns 1") {
        QbdBlocks b;
        b.A0 = MatrixXd::Constant(1, 1, 0.0);
        b.A1 = MatrixXd::Constant(1, 1, 0.5);
        b.A2 = MatrixXd::Constant(1, 1, 0.5);
        b.B00 = MatrixXd::Constant(1, 1, 1.0);
        b.B01 = MatrixXd::Constant(1, 1, 0.0);
        b.B10 = MatrixXd::Constant(1, 1, 0.5);
        const QbdSolution sol = solve_qbd(b);
        CHECK(conditional_probability(sol, 2) == 1.0);
    }
    SUBCASE("matches direct summation on a solved chain") {
        const QbdSolution sol =
            solve_qbd(build_distributed_chain(spec_for(1, 4, 0.7, kWorkingPoint)), 1e-13);
        RowVectorXd pi = sol.pi1;
        for (int i = 1; i < 3; ++i) pi = pi * sol.R;  // level m-1 = 3
        double tail = 0;
        RowVectorXd cur = pi;
        for (int i = 0; i < 500; ++i) {
            tail += cur.sum();
            cur = cur * sol.R;
        }
        CHECK(conditional_probability(sol, 4) ==
              doctest::Approx(pi.sum() / tail).epsilon(1e-9));
    }
}

TEST_CASE("fixed point: structure and degenerate cases") {
    SUBCASE("symmetric parameters give equal conditionals") {
        const auto res = fixed_point(ProtocolParams::nc(0.3, 0.3, 0.8, 0.5, 0.5), 4);
        REQUIRE(res.converged);
        CHECK(res.r1 == doctest::Approx(res.r2).epsilon(1e-6));
    }
    SUBCASE("one-sided traffic reduces to a single queue") {
        // g2 = 0: virtual buffer 2 never fills; throughput must match the
        // exact truncated chain.
        const ProtocolParams p = ProtocolParams::nc(0.5, 0.0, 0.75, 0.5, 0.5);
        const auto res = fixed_point(p, 4);
        REQUIRE(res.converged);
        const Metrics m = metrics(res, coefficients(p));
        const TruncatedChain chain = build_truncated(p, std::nullopt, 60);
        const Metrics om = oracle_metrics(chain, solve_truncated(chain));
        CHECK(m.S == doctest::Approx(om.S).epsilon(1e-6));
        CHECK(m.P == doctest::Approx(om.P).epsilon(1e-6));
    }
    SUBCASE("NonNC is rejected") {
        CHECK_THROWS_AS(fixed_point(ProtocolParams::non_nc(0.5, 0.25, 0.7), 4),
                        UnsupportedModeError);
    }
    SUBCASE("iteration cap is honest") {
        const auto res = fixed_point(kWorkingPoint, 4, 1e-16, 2);
        CHECK_FALSE(res.converged);
        CHECK(res.iterations == 2);
    }
    SUBCASE("deltas keep shrinking near the fixed point") {
        const auto res = fixed_point(kWorkingPoint, 4, 1e-12, 500);
        REQUIRE(res.converged);
        const auto& h = res.delta_history;
        REQUIRE(h.size() >= 3);
        CHECK(h[h.size() - 1] <= h[h.size() - 2]);
        CHECK(h[h.size() - 2] <= h[h.size() - 3]);
    }
}

TEST_CASE("metrics at the working point") {
    const auto res = fixed_point(kWorkingPoint, 4);
    REQUIRE(res.converged);
    const Metrics m = metrics(res, coefficients(kWorkingPoint));

    SUBCASE("Little's law holds exactly") {
        CHECK(m.D * m.S == doctest::Approx(m.N_R).epsilon(1e-12));
        CHECK(m.split.sum() == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("within 1% of the truncated oracle") {
        const TruncatedChain chain = build_truncated(kWorkingPoint, std::nullopt, 40);
        const Metrics om = oracle_metrics(chain, solve_truncated(chain));
        CHECK(std::abs(m.S / om.S - 1) < 0.01);
        CHECK(std::abs(m.P / om.P - 1) < 0.01);
        CHECK(std::abs(m.D / om.D - 1) < 0.01);
    }
    SUBCASE("the two chains agree on the occupancy pattern") {
        // Recompute the split from the buffer-2 chain.
        const RowVectorXd busy2 = tail_mass(res.sol2, 1);
        OccupancySplit s2;
        s2.both_empty = res.sol2.pi0(0);
        s2.only1 = res.sol2.pi0.sum() - s2.both_empty;
        s2.only2 = busy2(0);
        s2.both = busy2.sum() - s2.only2;
        CHECK(std::abs(s2.both_empty - m.split.both_empty) < 0.005);
        CHECK(std::abs(s2.only1 - m.split.only1) < 0.005);
        CHECK(std::abs(s2.only2 - m.split.only2) < 0.005);
        CHECK(std::abs(s2.both - m.split.both) < 0.005);
    }
    SUBCASE("agrees with the simulator") {
        SimConfig cfg;
        cfg.params = kWorkingPoint;
        cfg.horizon = 4'000'000;
        cfg.seed = 20250808;
        cfg.replications = 2;
        const SimMetrics sm = simulate(cfg);
        CHECK(std::abs(sm.S / m.S - 1) < 0.02);
        CHECK(std::abs(sm.P / m.P - 1) < 0.02);
        CHECK(std::abs(sm.D / m.D - 1) < 0.02);
    }
}

TEST_CASE("frozen system has zero throughput and power") {
    const ProtocolParams p = ProtocolParams::nc(0, 0, 0, 0, 0);
    const auto res = fixed_point(p, 4);
    REQUIRE(res.converged);
    const Metrics m = metrics(res, coefficients(p));
    CHECK(m.S == 0.0);
    CHECK(m.P == 0.0);
    CHECK(m.D == 0.0);
}

TEST_CASE("native-probability tradeoff moves delay and power as reported") {
    // Decreasing q1 at q = q2 = 0.75, g2 = 0.25, k = 2 must raise delay and
    // lower power monotonically.
    double prev_delay = -1.0, prev_power = 2.0;
    for (double q1 : {0.75, 0.55, 0.45}) {
        const ProtocolParams p = ProtocolParams::nc(0.5, 0.25, 0.75, q1, 0.75);
        const auto res = fixed_point(p, 4);
        REQUIRE(res.converged);
        const Metrics m = metrics(res, coefficients(p));
        CHECK(m.D >= prev_delay);
        CHECK(m.P <= prev_power);
        prev_delay = m.D;
        prev_power = m.P;
    }
}
