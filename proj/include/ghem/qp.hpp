#pragma once

#include <Eigen/Dense>

namespace ghem {

// Dense convex quadratic program:
//
//   min  0.5 x' Q x + c' x
//   s.t. A x  = b
//        G x <= h
//
// Q must be positive semidefinite (Q = 0 gives an LP). Either constraint
// block may be empty.
struct QpProblem {
    Eigen::MatrixXd Q;
    Eigen::VectorXd c;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::MatrixXd G;
    Eigen::VectorXd h;

    int num_vars() const { return static_cast<int>(c.size()); }
};

enum class QpStatus { Optimal, MaxIterations, NumericalFailure };

struct QpResult {
    QpStatus status = QpStatus::NumericalFailure;
    Eigen::VectorXd x;
    Eigen::VectorXd eq_duals;    // y
    Eigen::VectorXd ineq_duals;  // z >= 0
    double objective = 0.0;
    double kkt_residual = 0.0;   // max of scaled primal/dual residuals and gap
    int iterations = 0;
};

struct QpOptions {
    double tolerance = 1e-9;  // scaled KKT residual + complementarity gap
    int max_iterations = 60;
    double step_fraction = 0.9995;  // fraction-to-boundary
};

// Mehrotra predictor-corrector primal-dual interior-point method. The
// problem must be feasible with a nonempty interior in the inequalities
// (callers in this project pre-screen feasibility analytically).
QpResult solve_qp(const QpProblem& problem, const QpOptions& options = {});

}  // namespace ghem
