#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace dc2ac {

// Convex quadratic program
//   min 1/2 x'Hx + c'x
//   s.t. A_eq x = b_eq,  A_in x <= b_in,  lb <= x <= ub
// H must be symmetric positive semidefinite. An empty H is treated as zero
// (linear program); empty lb/ub mean unbounded. Individual bound entries may
// be +-infinity; lb_i == ub_i pins the variable.
struct QpProblem {
  Eigen::SparseMatrix<double> H;
  Eigen::VectorXd c;
  Eigen::SparseMatrix<double> A_eq;
  Eigen::VectorXd b_eq;
  Eigen::SparseMatrix<double> A_in;
  Eigen::VectorXd b_in;
  Eigen::VectorXd lb, ub;
};

enum class QpStatus { Optimal, Infeasible, Unbounded, MaxIter };

struct QpSolution {
  QpStatus status = QpStatus::MaxIter;
  int iterations = 0;
  Eigen::VectorXd x;
  double objective = 0.0;
  Eigen::VectorXd duals_eq;   // per A_eq row
  Eigen::VectorXd duals_in;   // per A_in row, >= 0
  Eigen::VectorXd mu_lb;      // lower-bound multipliers, >= 0
  Eigen::VectorXd mu_ub;      // upper-bound multipliers, >= 0
};

// Primal-dual interior point method (Mehrotra predictor-corrector) with
// static KKT regularization and iterative refinement of the step solves.
// Stops when scaled primal feasibility, stationarity and complementarity are
// all below tol. If the end-game degenerates after residuals have reached
// max(tol, 1e-6), the best iterate seen is returned as Optimal. Throws
// DimensionMismatch on inconsistent shapes and NumericalBreakdown when the
// KKT system cannot be factorized.
QpSolution solve_qp(const QpProblem& prob, double tol = 1e-8, int max_iter = 200);

}  // namespace dc2ac
