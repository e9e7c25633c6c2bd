#pragma once

#include <Eigen/Dense>

#include "twrn/errors.hpp"

namespace twrn {

// Block transition matrices of a discrete-time quasi-birth-death chain.
//
//        level 0   level 1   level 2  ...
//   0  [  B00       B01                  ]
//   1  [  B10       A1        A0         ]
//   2  [            A2        A1    A0   ]
//   ...
//
// The boundary level may carry its own phase count; every repeating level
// has A1.rows() phases.
struct QbdBlocks {
    Eigen::MatrixXd B00, B01, B10;
    Eigen::MatrixXd A0, A1, A2;

    int phases() const { return static_cast<int>(A1.rows()); }
    int boundary_phases() const { return static_cast<int>(B00.rows()); }
};

// Shape, entry-range, and row-stochasticity checks. Throws on violation.
void validate_blocks(const QbdBlocks& blocks, double tol = 1e-12);

// Matrix-geometric stationary description: pi_i = pi1 * R^(i-1) for i >= 1.
struct QbdSolution {
    Eigen::RowVectorXd pi0, pi1;
    Eigen::MatrixXd R;
    double residual = 0.0;  // max-abs defect of R = A0 + R A1 + R^2 A2
    int iterations = 0;
};

// Raised when the rate-matrix iteration fails to converge; carries the last
// iterate and its spectral radius.
struct QbdInstabilityError : Error {
    QbdInstabilityError(const std::string& msg, Eigen::MatrixXd last, double rho)
        : Error(msg), last_iterate(std::move(last)), spectral_radius(rho) {}
    Eigen::MatrixXd last_iterate;
    double spectral_radius;
};

struct DegenerateBlocksError : Error {
    using Error::Error;
};

struct MalformedBlocksError : Error {
    using Error::Error;
};

// Minimal nonnegative solution of R = A0 + R A1 + R^2 A2 via the linear
// progression iteration R <- (A0 + R^2 A2)(I - A1)^-1 started from zero.
// The iterate sequence is checked to be entrywise nondecreasing.
Eigen::MatrixXd solve_rate_matrix(const QbdBlocks& blocks, double tol = 1e-10,
                                  int max_iter = 100000, int* iterations_out = nullptr);

// Boundary solve: pi0 (B00 - I) + pi1 B10 = 0 and
// pi0 B01 + pi1 (A1 - I + R A2) = 0 with pi0 1 + pi1 (I-R)^-1 1 = 1.
QbdSolution stationary(const QbdBlocks& blocks, const Eigen::MatrixXd& R);

// Rate-matrix solve plus boundary solve in one call.
QbdSolution solve_qbd(const QbdBlocks& blocks, double tol = 1e-10, int max_iter = 100000);

// Per-phase mass of levels >= from_level; from_level 0 folds in pi0.
Eigen::RowVectorXd tail_mass(const QbdSolution& sol, int from_level);

// Mean level index, pi1 (I-R)^-2 1.
double expected_level(const QbdSolution& sol);

// Dominant eigenvalue modulus of a nonnegative matrix by power iteration.
double spectral_radius(const Eigen::MatrixXd& m, double tol = 1e-10);

// Mean drift of the repeating portion: theta (A2 - A0) 1 for the stationary
// phase vector theta of A0+A1+A2. Positive iff the chain is stable.
double mean_drift(const QbdBlocks& blocks);

}  // namespace twrn
