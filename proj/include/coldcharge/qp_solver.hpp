// First-order operator-splitting solver for convex quadratic programs
//   min 0.5 x'Px + q'x   s.t.  lower <= Ax <= upper,
// with Ruiz equilibration, an LDLT-factorized reduced KKT system, adaptive
// step size, and an active-set polish step for high-accuracy KKT residuals.
#pragma once

#include <Eigen/Sparse>

namespace coldcharge {

struct QpProblem {
    Eigen::SparseMatrix<double> objective;  // P, symmetric PSD
    Eigen::VectorXd linear;                 // q
    Eigen::SparseMatrix<double> constraints;  // A
    Eigen::VectorXd lower;                  // may contain -inf
    Eigen::VectorXd upper;                  // may contain +inf
};

struct QpSettings {
    double eps_abs = 1e-8;
    double eps_rel = 1e-8;
    int max_iter = 150000;
    int check_every = 25;
    double rho = 0.1;
    double sigma = 1e-6;
    double relax_alpha = 1.6;
    double polish_target = 1e-8;  // accept polish when residuals fall below
};

struct QpResult {
    Eigen::VectorXd x;
    Eigen::VectorXd y;  // row multipliers (negative at lower, positive at upper)
    Eigen::VectorXd z;  // Ax at the returned point
    double objective = 0.0;  // 0.5 x'Px + q'x
    int iterations = 0;
    bool converged = false;
    bool polished = false;
    double primal_residual = 0.0;  // max violation of lower <= Ax <= upper
    double dual_residual = 0.0;    // ||Px + q + A'y||_inf
    double comp_residual = 0.0;    // max |y_i| * distance to the active bound
};

QpResult solve_qp(const QpProblem& problem, const QpSettings& settings = {});

}  // namespace coldcharge
