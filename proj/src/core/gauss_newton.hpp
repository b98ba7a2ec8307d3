#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace mfggp {

struct GaussNewtonConfig {
  int max_iters = 60;
  double rel_tol = 1e-10;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 40;
  bool verbose = false;
};

struct GaussNewtonDiagnostics {
  std::vector<double> objective_trace;  // objective at the initial point and after each accepted step
  std::vector<double> residual_norms;   // norm of the non-prior residual block, same indexing
  int iterations = 0;
  bool converged = false;
  std::string message;
};

/// Least-squares model
///
///   F(x) = |P x|^2 + |c(x)|^2,   P = diag(prior_weights),
///
/// over whitened coordinates: prior rows are exact and diagonal; c collects
/// the data, penalty, and (possibly nonlinear) constraint residuals and must
/// report its Jacobian. Entries of prior_weights may be zero (unregularized
/// coordinates such as log-parameterized scalars).
class NlsModel {
 public:
  virtual ~NlsModel() = default;
  virtual Eigen::Index num_vars() const = 0;
  virtual Eigen::Index num_residuals() const = 0;
  virtual const Eigen::VectorXd& prior_weights() const = 0;
  virtual void residuals(const Eigen::VectorXd& x, Eigen::VectorXd& c) const = 0;
  virtual void residuals_and_jacobian(const Eigen::VectorXd& x, Eigen::VectorXd& c,
                                      Eigen::MatrixXd& jacobian) const = 0;
};

double nls_objective(const NlsModel& model, const Eigen::VectorXd& x);

/// Exact gradient of the objective implied by the model's residual Jacobian,
/// 2 (P^2 x + J^T c). Used by finite-difference consistency checks.
Eigen::VectorXd nls_gradient(const NlsModel& model, const Eigen::VectorXd& x);

/// Gauss-Newton with Armijo backtracking on the true objective. Linearizes c
/// at the current iterate, solves the damped-free normal equations through a
/// Woodbury factorization of the prior block, and produces a nonincreasing
/// objective sequence. Stops when the relative objective decrease falls below
/// rel_tol, the step vanishes, or max_iters is reached.
GaussNewtonDiagnostics gauss_newton(const NlsModel& model, Eigen::VectorXd& x,
                                    const GaussNewtonConfig& config = {});

}  // namespace mfggp
