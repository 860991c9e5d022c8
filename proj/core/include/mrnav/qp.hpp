#pragma once

#include <Eigen/Core>
#include <optional>

namespace mrnav {

/// Convex QP in the two-sided form
///     min 0.5 x'Px + q'x   s.t.   lower <= Ax <= upper,
/// with P symmetric positive semidefinite. Bounds may be +/-infinity.
struct QpProblem {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  Eigen::MatrixXd A;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index num_vars() const { return q.size(); }
  Eigen::Index num_constraints() const { return lower.size(); }
};

struct QpSettings {
  double rho = 0.1;          // ADMM penalty
  double sigma = 1e-6;       // proximal regularization
  double alpha = 1.6;        // relaxation
  double eps_abs = 1e-9;
  double eps_rel = 1e-9;
  int max_iterations = 4000;
  int check_interval = 10;   // residual/polish cadence
  bool adaptive_rho = true;
  double polish_delta = 1e-9;
  bool scale_rows = true;    // normalize constraint rows to unit inf-norm
};

struct QpResult {
  Eigen::VectorXd x;   // primal solution
  Eigen::VectorXd y;   // constraint multipliers (y>0: upper active, y<0: lower)
  Eigen::VectorXd z;   // Ax at the solution
  double objective = 0.0;
  int iterations = 0;
  bool polished = false;
  bool converged = false;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

struct QpWarmStart {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

/// Operator-splitting solver with a direct active-set polish step. The ADMM
/// loop runs until residual tolerances hold, then a KKT solve on the detected
/// active set sharpens the iterate to linear-solver precision; the polished
/// point is accepted only if it verifies primal feasibility and dual signs.
QpResult solve_qp(const QpProblem& problem, const QpSettings& settings = {},
                  const std::optional<QpWarmStart>& warm = std::nullopt);

}  // namespace mrnav
