#include "twrn/qbd.hpp"

#include <cmath>

namespace twrn {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

namespace {

void check_entries(const MatrixXd& m, const char* name, double tol) {
    if ((m.array() < -tol).any() || (m.array() > 1 + tol).any())
        throw MalformedBlocksError(std::string(name) + " has entries outside [0,1]");
}

void check_row_sums(const std::vector<const MatrixXd*>& blocks, const char* what,
                    double tol) {
    VectorXd sums = VectorXd::Zero(blocks.front()->rows());
    for (const MatrixXd* b : blocks) sums += b->rowwise().sum();
    if (((sums.array() - 1.0).abs() > tol).any())
        throw MalformedBlocksError(std::string("rows of ") + what + " do not sum to 1");
}

}  // namespace

void validate_blocks(const QbdBlocks& b, double tol) {
    const int m = b.phases();
    const int mb = b.boundary_phases();
    if (m < 1 || mb < 1) throw MalformedBlocksError("empty blocks");
    if (b.A0.rows() != m || b.A0.cols() != m || b.A2.rows() != m || b.A2.cols() != m ||
        b.A1.cols() != m)
        throw MalformedBlocksError("repeating blocks must be square and equally sized");
    if (b.B00.cols() != mb || b.B01.rows() != mb || b.B01.cols() != m ||
        b.B10.rows() != m || b.B10.cols() != mb)
        throw MalformedBlocksError("boundary block shapes are inconsistent");
    check_entries(b.B00, "B00", tol);
    check_entries(b.B01, "B01", tol);
    check_entries(b.B10, "B10", tol);
    check_entries(b.A0, "A0", tol);
    check_entries(b.A1, "A1", tol);
    check_entries(b.A2, "A2", tol);
    check_row_sums({&b.B00, &b.B01}, "[B00|B01]", tol);
    check_row_sums({&b.B10, &b.A1, &b.A0}, "[B10|A1|A0]", tol);
    check_row_sums({&b.A2, &b.A1, &b.A0}, "[A2|A1|A0]", tol);
}

Eigen::MatrixXd solve_rate_matrix(const QbdBlocks& b, double tol, int max_iter,
                                  int* iterations_out) {
    const int m = b.phases();
    if (b.A0.cwiseAbs().maxCoeff() == 0.0) {
        // No upward transitions at all: R = 0, independently of A1.
        if (iterations_out) *iterations_out = 0;
        return MatrixXd::Zero(m, m);
    }
    const MatrixXd ImA1 = MatrixXd::Identity(m, m) - b.A1;
    Eigen::PartialPivLU<MatrixXd> lu(ImA1);
    const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(min_pivot > 1e-13))
        throw DegenerateBlocksError("I - A1 is singular");
    const MatrixXd W = lu.inverse();  // (I - A1)^-1, nonnegative
    const MatrixXd A0W = b.A0 * W;
    const MatrixXd A2W = b.A2 * W;

    MatrixXd r = MatrixXd::Zero(m, m);
    MatrixXd rsq(m, m), next(m, m);
    for (int it = 1; it <= max_iter; ++it) {
        rsq.noalias() = r * r;
        next.noalias() = rsq * A2W;
        next += A0W;
        const double diff = (next - r).cwiseAbs().maxCoeff();
        const double drop = (r - next).maxCoeff();
        if (drop > 1e-12)
            throw Error("rate-matrix iteration lost monotonicity");
        r.swap(next);
        if (diff < tol) {
            if (iterations_out) *iterations_out = it;
            return r;
        }
    }
    throw QbdInstabilityError("rate-matrix iteration did not converge", r,
                              spectral_radius(r));
}

namespace {

// Level 0 cannot be left: the stationary mass (from an empty start) lives on
// the phases of B00 reachable from phase 0.
QbdSolution boundary_absorbed_solution(const QbdBlocks& b, const MatrixXd& R) {
    const int mb = b.boundary_phases();
    std::vector<char> reach(mb, 0);
    std::vector<int> stack{0};
    reach[0] = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v = 0; v < mb; ++v)
            if (!reach[v] && b.B00(u, v) > 0) {
                reach[v] = 1;
                stack.push_back(v);
            }
    }
    std::vector<int> idx;
    for (int v = 0; v < mb; ++v)
        if (reach[v]) idx.push_back(v);
    const int n = static_cast<int>(idx.size());
    MatrixXd sub(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) sub(i, j) = b.B00(idx[i], idx[j]);
    MatrixXd sys = (sub - MatrixXd::Identity(n, n)).transpose();
    sys.row(0).setOnes();
    VectorXd rhs = VectorXd::Zero(n);
    rhs(0) = 1.0;
    VectorXd x = Eigen::PartialPivLU<MatrixXd>(sys).solve(rhs);
    if (!x.allFinite() || (sys * x - rhs).cwiseAbs().maxCoeff() > 1e-9)
        throw MalformedBlocksError("absorbing boundary has no unique distribution");

    QbdSolution sol;
    sol.R = R;
    sol.pi0 = RowVectorXd::Zero(mb);
    for (int i = 0; i < n; ++i) sol.pi0(idx[i]) = std::max(0.0, x(i));
    sol.pi0 /= sol.pi0.sum();
    sol.pi1 = RowVectorXd::Zero(b.phases());
    sol.residual = (sol.pi0 * (b.B00 - MatrixXd::Identity(mb, mb))).cwiseAbs().maxCoeff();
    return sol;
}

}  // namespace

QbdSolution stationary(const QbdBlocks& b, const MatrixXd& R) {
    const int m = b.phases();
    const int mb = b.boundary_phases();
    if (b.B01.cwiseAbs().maxCoeff() == 0.0) return boundary_absorbed_solution(b, R);
    // A numerically converged R can sit a hair under radius 1 even when the
    // chain has no stationary distribution; the mean-drift test is exact.
    if (mean_drift(b) <= 0)
        throw UnstableChainError("nonpositive mean drift; chain is not positive recurrent");
    const double rho = spectral_radius(R);
    if (!(rho < 1.0))
        throw UnstableChainError("spectral radius of R is " + std::to_string(rho) +
                                 "; chain has no stationary distribution");

    const MatrixXd ImR = MatrixXd::Identity(m, m) - R;
    Eigen::PartialPivLU<MatrixXd> lu_ImR(ImR);
    const VectorXd w = lu_ImR.solve(VectorXd::Ones(m));  // (I-R)^-1 1

    const int n = mb + m;
    MatrixXd balance(n, n);
    balance.topLeftCorner(mb, mb) = b.B00 - MatrixXd::Identity(mb, mb);
    balance.topRightCorner(mb, m) = b.B01;
    balance.bottomLeftCorner(m, mb) = b.B10;
    balance.bottomRightCorner(m, m) = b.A1 - MatrixXd::Identity(m, m) + R * b.A2;

    MatrixXd sys = balance.transpose();
    sys.row(0).head(mb).setOnes();
    sys.row(0).tail(m) = w.transpose();
    VectorXd rhs = VectorXd::Zero(n);
    rhs(0) = 1.0;

    Eigen::PartialPivLU<MatrixXd> lu(sys);
    VectorXd x = lu.solve(rhs);
    const double defect = (sys * x - rhs).cwiseAbs().maxCoeff();
    if (!x.allFinite() || defect > 1e-8) {
        Eigen::FullPivLU<MatrixXd> full(balance);
        full.setThreshold(1e-10);
        if (full.rank() < n - 1)
            throw MalformedBlocksError(
                "boundary system is rank-deficient beyond the stationary direction");
        throw MalformedBlocksError("boundary solve failed");
    }
    // Clamp solver-noise negatives, reject anything larger.
    for (int i = 0; i < n; ++i) {
        if (x(i) < 0) {
            if (x(i) < -1e-9)
                throw MalformedBlocksError("stationary solve produced negative mass");
            x(i) = 0;
        }
    }

    QbdSolution sol;
    sol.R = R;
    sol.pi0 = x.head(mb).transpose();
    sol.pi1 = x.tail(m).transpose();
    const double mass = sol.pi0.sum() + sol.pi1 * w;
    sol.pi0 /= mass;
    sol.pi1 /= mass;

    const MatrixXd fixed_point_defect = R - (b.A0 + R * b.A1 + R * R * b.A2);
    double balance_defect = 0.0;
    RowVectorXd full_row(n);
    full_row << sol.pi0, sol.pi1;
    balance_defect = (full_row * balance).cwiseAbs().maxCoeff();
    sol.residual = std::max(fixed_point_defect.cwiseAbs().maxCoeff(), balance_defect);
    return sol;
}

QbdSolution solve_qbd(const QbdBlocks& b, double tol, int max_iter) {
    int iters = 0;
    MatrixXd R = solve_rate_matrix(b, tol, max_iter, &iters);
    QbdSolution sol = stationary(b, R);
    sol.iterations = iters;
    return sol;
}

Eigen::RowVectorXd tail_mass(const QbdSolution& sol, int from_level) {
    const int m = static_cast<int>(sol.pi1.cols());
    const MatrixXd ImR_t = (MatrixXd::Identity(m, m) - sol.R).transpose();
    Eigen::PartialPivLU<MatrixXd> lu(ImR_t);

    auto geometric_tail = [&](int level) {
        RowVectorXd v = sol.pi1;
        for (int i = 1; i < level; ++i) v = v * sol.R;
        return RowVectorXd((lu.solve(v.transpose())).transpose());
    };
    if (from_level <= 0) {
        RowVectorXd t = geometric_tail(1);
        // Boundary phases may differ from repeating phases; fold pi0 in only
        // when the layouts agree, which is the case for every chain here.
        if (sol.pi0.cols() == t.cols()) t += sol.pi0;
        return t;
    }
    return geometric_tail(from_level);
}

double expected_level(const QbdSolution& sol) {
    const int m = static_cast<int>(sol.pi1.cols());
    const MatrixXd ImR_t = (MatrixXd::Identity(m, m) - sol.R).transpose();
    Eigen::PartialPivLU<MatrixXd> lu(ImR_t);
    VectorXd y = lu.solve(sol.pi1.transpose());
    VectorXd z = lu.solve(y);
    return z.sum();
}

double spectral_radius(const MatrixXd& m, double tol) {
    const int n = static_cast<int>(m.rows());
    if (n == 0) return 0.0;
    if (m.cwiseAbs().maxCoeff() == 0.0) return 0.0;
    // Shift by I so the iteration matrix has positive diagonal: removes
    // periodicity concerns and keeps every component of x positive.
    const MatrixXd shifted = m + MatrixXd::Identity(n, n);
    VectorXd x = VectorXd::Ones(n);
    double est = 0.0;
    for (int it = 0; it < 200000; ++it) {
        VectorXd y = shifted * x;
        double lambda = 0.0;
        for (int i = 0; i < n; ++i)
            if (x(i) > 1e-290) lambda = std::max(lambda, y(i) / x(i));
        y /= y.maxCoeff();
        const double change = std::abs(lambda - est);
        est = lambda;
        x = y;
        if (it > 2 && change < tol * 1e-2) break;
    }
    return est - 1.0;
}

double mean_drift(const QbdBlocks& b) {
    const int m = b.phases();
    const MatrixXd A = b.A0 + b.A1 + b.A2;
    MatrixXd sys = (A - MatrixXd::Identity(m, m)).transpose();
    sys.row(0).setOnes();
    VectorXd rhs = VectorXd::Zero(m);
    rhs(0) = 1.0;
    VectorXd theta = Eigen::PartialPivLU<MatrixXd>(sys).solve(rhs);
    if (!theta.allFinite() || (sys * theta - rhs).cwiseAbs().maxCoeff() > 1e-8) {
        // Reducible phase process: fall back to power iteration, which lands
        // in the recurrent class reachable from a uniform start.
        RowVectorXd t = RowVectorXd::Constant(m, 1.0 / m);
        for (int it = 0; it < 200000; ++it) {
            RowVectorXd next = t * A;
            next /= next.sum();
            if ((next - t).cwiseAbs().maxCoeff() < 1e-13) {
                t = next;
                break;
            }
            t = next;
        }
        theta = t.transpose();
    }
    theta = theta.cwiseMax(0.0);
    theta /= theta.sum();
    return theta.dot((b.A2 - b.A0) * VectorXd::Ones(m));
}

}  // namespace twrn
