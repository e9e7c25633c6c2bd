#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "twrn/qbd.hpp"

using namespace twrn;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

namespace {

QbdBlocks scalar_chain(double a0, double a1, double a2, double b00, double b01,
                       double b10) {
    QbdBlocks b;
    b.A0 = MatrixXd::Constant(1, 1, a0);
    b.A1 = MatrixXd::Constant(1, 1, a1);
    b.A2 = MatrixXd::Constant(1, 1, a2);
    b.B00 = MatrixXd::Constant(1, 1, b00);
    b.B01 = MatrixXd::Constant(1, 1, b01);
    b.B10 = MatrixXd::Constant(1, 1, b10);
    return b;
}

// Random stable blocks: rows of [A2|A1|A0] stochastic with the downward mass
// boosted until the mean drift is positive.
QbdBlocks random_stable_blocks(std::mt19937_64& rng, int phases) {
    std::uniform_real_distribution<> u(0.05, 1.0);
    for (;;) {
        MatrixXd a0(phases, phases), a1(phases, phases), a2(phases, phases);
        for (int i = 0; i < phases; ++i) {
            double sum = 0;
            for (int j = 0; j < phases; ++j) {
                a0(i, j) = u(rng) * 0.3;
                a1(i, j) = u(rng);
                a2(i, j) = u(rng) * 2.0;
                sum += a0(i, j) + a1(i, j) + a2(i, j);
            }
            for (int j = 0; j < phases; ++j) {
                a0(i, j) /= sum;
                a1(i, j) /= sum;
                a2(i, j) /= sum;
            }
        }
        QbdBlocks b;
        b.A0 = a0;
        b.A1 = a1;
        b.A2 = a2;
        // Boundary: fold the downward mass back into the same level.
        b.B00 = a1 + a2;
        b.B01 = a0;
        b.B10 = a2;
        if (mean_drift(b) > 0.05) return b;
    }
}

// Independent oracle: the plain fixed-point iteration R <- A0 + R A1 + R^2 A2.
MatrixXd naive_rate_matrix(const QbdBlocks& b, long iters) {
    MatrixXd r = MatrixXd::Zero(b.phases(), b.phases());
    for (long i = 0; i < iters; ++i) {
        MatrixXd next = b.A0 + r * b.A1 + r * r * b.A2;
        if ((next - r).cwiseAbs().maxCoeff() < 1e-15) return next;
        r = next;
    }
    return r;
}

// Independent oracle: dense stationary solve of the chain truncated to
// `levels` levels with the top level made reflecting.
VectorXd dense_truncated_stationary(const QbdBlocks& b, int levels) {
    const int m = b.phases();
    const int mb = b.boundary_phases();
    const int n = mb + (levels - 1) * m;
    MatrixXd p = MatrixXd::Zero(n, n);
    auto at = [&](int level) { return level == 0 ? 0 : mb + (level - 1) * m; };
    p.block(0, at(0), mb, mb) = b.B00;
    p.block(0, at(1), mb, m) = b.B01;
    p.block(at(1), at(0), m, mb) = b.B10;
    for (int level = 1; level < levels; ++level) {
        p.block(at(level), at(level), m, m) = b.A1;
        if (level + 1 < levels)
            p.block(at(level), at(level + 1), m, m) = b.A0;
        else
            p.block(at(level), at(level), m, m) += b.A0;  // reflect at the cap
        if (level > 1) p.block(at(level), at(level - 1), m, m) = b.A2;
    }
    MatrixXd sys = (p - MatrixXd::Identity(n, n)).transpose();
    sys.row(0).setOnes();
    VectorXd rhs = VectorXd::Zero(n);
    rhs(0) = 1.0;
    return sys.partialPivLu().solve(rhs);
}

}  // namespace

TEST_CASE("scalar chain: closed-form anchors") {
    const QbdBlocks b = scalar_chain(0.2, 0.5, 0.3, 0.8, 0.2, 0.3);
    int iters = 0;
    const MatrixXd r = solve_rate_matrix(b, 1e-15, 200000, &iters);
    CHECK(std::abs(r(0, 0) - 2.0 / 3.0) < 1e-12);
    CHECK(iters > 0);

    const QbdSolution sol = stationary(b, r);
    CHECK(std::abs(sol.pi0(0) - 1.0 / 3.0) < 1e-12);
    for (int i = 1; i <= 8; ++i) {
        const double want = (1.0 / 3.0) * std::pow(2.0 / 3.0, i);
        RowVectorXd pi_i = sol.pi1;
        for (int k = 1; k < i; ++k) pi_i = pi_i * sol.R;
        CHECK(std::abs(pi_i(0) - want) < 1e-12);
    }
    CHECK(std::abs(expected_level(sol) - 2.0) < 1e-11);
    CHECK(std::abs(tail_mass(sol, 2).sum() - 4.0 / 9.0) < 1e-12);
    CHECK(std::abs(tail_mass(sol, 1).sum() - (1.0 - sol.pi0.sum())) < 1e-12);
    CHECK(std::abs(tail_mass(sol, 0).sum() - 1.0) < 1e-12);
}

TEST_CASE("no upward transitions") {
    // A0 = 0 forces R = 0 and all mass on levels 0 and 1.
    const QbdBlocks b = scalar_chain(0.0, 0.6, 0.4, 0.7, 0.3, 0.4);
    const MatrixXd r = solve_rate_matrix(b);
    CHECK(r.cwiseAbs().maxCoeff() == 0.0);
    const QbdSolution sol = stationary(b, r);
    CHECK(sol.pi0.sum() + sol.pi1.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(expected_level(sol) == doctest::Approx(sol.pi1.sum()).epsilon(1e-12));
}

TEST_CASE("rate matrix matches the naive fixed-point oracle") {
    std::mt19937_64 rng(9001);
    for (int rep = 0; rep < 3; ++rep) {
        const QbdBlocks b = random_stable_blocks(rng, 4);
        const MatrixXd r = solve_rate_matrix(b, 1e-13);
        const MatrixXd oracle = naive_rate_matrix(b, 1000000);
        CHECK((r - oracle).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(r.minCoeff() >= 0.0);
        // Minimality: the solver result never exceeds the oracle iterate.
        CHECK((r - oracle).maxCoeff() < 1e-8);
        CHECK(spectral_radius(r) < 1.0);
    }
}

TEST_CASE("stationary distribution matches a dense truncated solve") {
    std::mt19937_64 rng(9002);
    const QbdBlocks b = random_stable_blocks(rng, 2);
    const QbdSolution sol = solve_qbd(b, 1e-13);
    const VectorXd dense = dense_truncated_stationary(b, 60);
    // Compare level masses.
    CHECK(std::abs(sol.pi0.sum() - dense.head(2).sum()) < 1e-8);
    RowVectorXd pi_i = sol.pi1;
    for (int level = 1; level < 12; ++level) {
        const double md = dense.segment(2 * level, 2).sum();
        CHECK(std::abs(pi_i.sum() - md) < 1e-8);
        pi_i = pi_i * sol.R;
    }
}

TEST_CASE("global balance holds on the reconstructed chain") {
    std::mt19937_64 rng(9003);
    const QbdBlocks b = random_stable_blocks(rng, 3);
    const QbdSolution sol = solve_qbd(b, 1e-13);
    CHECK(sol.residual < 1e-10);

    // pi P = pi over levels 0..40 with the tail folded into the tolerance.
    std::vector<RowVectorXd> pi(42);
    pi[0] = sol.pi0;
    pi[1] = sol.pi1;
    for (int i = 2; i < 42; ++i) pi[i] = pi[i - 1] * sol.R;
    for (int level = 0; level <= 40; ++level) {
        RowVectorXd inflow;
        if (level == 0) {
            inflow = pi[0] * b.B00 + pi[1] * b.B10;
        } else if (level == 1) {
            inflow = pi[0] * b.B01 + pi[1] * b.A1 + pi[2] * b.A2;
        } else {
            inflow = pi[level - 1] * b.A0 + pi[level] * b.A1 + pi[level + 1] * b.A2;
        }
        CHECK((inflow - pi[level]).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("tail mass and expected level against direct summation") {
    std::mt19937_64 rng(9004);
    const QbdBlocks b = random_stable_blocks(rng, 3);
    const QbdSolution sol = solve_qbd(b, 1e-13);

    std::vector<RowVectorXd> pi(501);
    pi[1] = sol.pi1;
    for (int i = 2; i <= 500; ++i) pi[i] = pi[i - 1] * sol.R;

    double expect = 0;
    for (int i = 1; i <= 500; ++i) expect += i * pi[i].sum();
    CHECK(std::abs(expected_level(sol) - expect) < 1e-8);

    double prev = 2.0;
    for (int from : {1, 2, 3, 5, 9}) {
        RowVectorXd direct = RowVectorXd::Zero(3);
        for (int i = from; i <= 500; ++i) direct += pi[i];
        const RowVectorXd tm = tail_mass(sol, from);
        CHECK((tm - direct).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(tm.sum() <= prev + 1e-14);  // nonincreasing in the level
        prev = tm.sum();
    }
}

TEST_CASE("spectral radius") {
    CHECK(spectral_radius(MatrixXd::Constant(1, 1, 2.0 / 3.0)) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(spectral_radius(MatrixXd::Zero(3, 3)) == 0.0);

    std::mt19937_64 rng(9005);
    std::uniform_real_distribution<> u(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        MatrixXd m(5, 5);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) m(i, j) = u(rng);
        const double mine = spectral_radius(m);
        const double reference =
            Eigen::EigenSolver<MatrixXd>(m).eigenvalues().cwiseAbs().maxCoeff();
        CHECK(mine == doctest::Approx(reference).epsilon(1e-8));
    }
}

TEST_CASE("block validation and solver failure modes") {
    SUBCASE("singular I - A1") {
        QbdBlocks b = scalar_chain(0.2, 1.0, 0.3, 1.0, 0.0, 0.0);
        CHECK_THROWS_AS(solve_rate_matrix(b), DegenerateBlocksError);
    }
    SUBCASE("no upward transitions shortcut") {
        // A0 = 0 must return R = 0 even when I - A1 is singular.
        QbdBlocks b = scalar_chain(0.0, 1.0, 0.0, 1.0, 0.0, 0.0);
        CHECK(solve_rate_matrix(b).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("unstable chain is rejected by the stationary solve") {
        // Upward drift: the minimal solution converges to spectral radius 1.
        const QbdBlocks b = scalar_chain(0.3, 0.5, 0.2, 0.7, 0.3, 0.2);
        CHECK(mean_drift(b) < 0);
        const MatrixXd r = solve_rate_matrix(b, 1e-12);
        CHECK(r(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK_THROWS_AS(stationary(b, r), UnstableChainError);
    }
    SUBCASE("critical chain exhausts the iteration budget") {
        // Zero drift: critical slowing, the iteration cannot reach 1e-12 in
        // a few hundred steps and must report its last iterate.
        const QbdBlocks b = scalar_chain(0.25, 0.5, 0.25, 0.75, 0.25, 0.25);
        try {
            solve_rate_matrix(b, 1e-12, 300);
            FAIL("expected QbdInstabilityError");
        } catch (const QbdInstabilityError& e) {
            CHECK(e.spectral_radius > 0.9);
            CHECK(e.last_iterate.rows() == 1);
            CHECK(e.last_iterate(0, 0) < 1.0);
        }
    }
    SUBCASE("malformed row sums") {
        QbdBlocks b = scalar_chain(0.2, 0.5, 0.2, 0.8, 0.2, 0.3);  // rows sum to 0.9
        CHECK_THROWS_AS(validate_blocks(b), MalformedBlocksError);
    }
    SUBCASE("mean drift of the scalar anchors") {
        CHECK(mean_drift(scalar_chain(0.2, 0.5, 0.3, 0.8, 0.2, 0.3)) ==
              doctest::Approx(0.1).epsilon(1e-12));
    }
}
