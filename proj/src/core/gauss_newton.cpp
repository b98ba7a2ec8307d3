#include "core/gauss_newton.hpp"

#include <cmath>

#include "core/common.hpp"

namespace mfggp {

double nls_objective(const NlsModel& model, const Eigen::VectorXd& x) {
  Eigen::VectorXd c;
  model.residuals(x, c);
  const Eigen::VectorXd& p = model.prior_weights();
  return p.cwiseProduct(x).squaredNorm() + c.squaredNorm();
}

Eigen::VectorXd nls_gradient(const NlsModel& model, const Eigen::VectorXd& x) {
  Eigen::VectorXd c;
  Eigen::MatrixXd jac;
  model.residuals_and_jacobian(x, c, jac);
  const Eigen::VectorXd& p = model.prior_weights();
  return 2.0 * (p.array().square() * x.array()).matrix() + 2.0 * jac.transpose() * c;
}

namespace {

// Solves (D + B^T B) step = rhs where D = diag(p^2) is positive on the R
// coordinates and zero on the E coordinates. The R block goes through the
// Woodbury identity (the row count of B is much smaller than the variable
// count here); the E block is eliminated by its Schur complement.
struct StepSolver {
  std::vector<Eigen::Index> r_idx, e_idx;
  Eigen::VectorXd d_r;  // positive prior weights squared over R

  explicit StepSolver(const Eigen::VectorXd& prior_weights) {
    for (Eigen::Index i = 0; i < prior_weights.size(); ++i) {
      if (prior_weights[i] > 0.0)
        r_idx.push_back(i);
      else
        e_idx.push_back(i);
    }
    d_r.resize(static_cast<Eigen::Index>(r_idx.size()));
    for (std::size_t k = 0; k < r_idx.size(); ++k) {
      const double p = prior_weights[r_idx[k]];
      d_r[static_cast<Eigen::Index>(k)] = p * p;
    }
  }

  Eigen::VectorXd solve(const Eigen::MatrixXd& jac, const Eigen::VectorXd& rhs) const {
    const Eigen::Index n = jac.cols();
    const Eigen::Index m = jac.rows();
    const Eigen::Index nr = static_cast<Eigen::Index>(r_idx.size());
    const Eigen::Index ne = static_cast<Eigen::Index>(e_idx.size());

    Eigen::MatrixXd b_r(m, nr), b_e(m, ne);
    for (Eigen::Index k = 0; k < nr; ++k) b_r.col(k) = jac.col(r_idx[k]);
    for (Eigen::Index k = 0; k < ne; ++k) b_e.col(k) = jac.col(e_idx[k]);

    Eigen::VectorXd rhs_r(nr), rhs_e(ne);
    for (Eigen::Index k = 0; k < nr; ++k) rhs_r[k] = rhs[r_idx[k]];
    for (Eigen::Index k = 0; k < ne; ++k) rhs_e[k] = rhs[e_idx[k]];

    // M = I + B_R D^{-1} B_R^T, formed and factorized once per step.
    Eigen::VectorXd d_inv_sqrt = d_r.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd scaled = b_r * d_inv_sqrt.asDiagonal();
    Eigen::MatrixXd m_mat = Eigen::MatrixXd::Identity(m, m);
    m_mat.selfadjointView<Eigen::Lower>().rankUpdate(scaled, 1.0);
    Eigen::LLT<Eigen::MatrixXd> m_llt(m_mat.selfadjointView<Eigen::Lower>());
    if (m_llt.info() != Eigen::Success)
      throw SolverError("Gauss-Newton normal equations: Woodbury core factorization failed");

    auto solve_r = [&](const Eigen::MatrixXd& v) -> Eigen::MatrixXd {
      // (D + B_R^T B_R)^{-1} v via Woodbury.
      Eigen::MatrixXd dv = d_r.cwiseInverse().asDiagonal() * v;
      Eigen::MatrixXd t = m_llt.solve(b_r * dv);
      return dv - d_r.cwiseInverse().asDiagonal() * (b_r.transpose() * t);
    };

    Eigen::VectorXd step = Eigen::VectorXd::Zero(n);
    if (ne == 0) {
      Eigen::VectorXd step_r = solve_r(rhs_r);
      for (Eigen::Index k = 0; k < nr; ++k) step[r_idx[k]] = step_r[k];
      return step;
    }

    Eigen::MatrixXd c_mat = b_r.transpose() * b_e;          // A_RE
    Eigen::MatrixXd y = solve_r(c_mat);                      // A_RR^{-1} A_RE
    Eigen::MatrixXd schur = b_e.transpose() * b_e - c_mat.transpose() * y;
    Eigen::VectorXd u = solve_r(rhs_r);
    Eigen::VectorXd rhs_schur = rhs_e - c_mat.transpose() * u;

    Eigen::LLT<Eigen::MatrixXd> schur_llt(schur);
    Eigen::VectorXd step_e;
    if (schur_llt.info() == Eigen::Success) {
      step_e = schur_llt.solve(rhs_schur);
    } else {
      // Degenerate unregularized block: fall back to a damped solve so the
      // step remains a descent direction.
      Eigen::MatrixXd damped = schur;
      damped.diagonal().array() += 1e-12 * (1.0 + schur.diagonal().cwiseAbs().maxCoeff());
      step_e = Eigen::LDLT<Eigen::MatrixXd>(damped).solve(rhs_schur);
    }
    Eigen::VectorXd step_r = u - y * step_e;
    for (Eigen::Index k = 0; k < nr; ++k) step[r_idx[k]] = step_r[k];
    for (Eigen::Index k = 0; k < ne; ++k) step[e_idx[k]] = step_e[k];
    return step;
  }
};

}  // namespace

GaussNewtonDiagnostics gauss_newton(const NlsModel& model, Eigen::VectorXd& x,
                                    const GaussNewtonConfig& config) {
  GaussNewtonDiagnostics diag;
  const Eigen::VectorXd& p = model.prior_weights();
  require(x.size() == model.num_vars(), "Gauss-Newton initial point size mismatch");

  StepSolver solver(p);
  Eigen::VectorXd c;
  Eigen::MatrixXd jac;

  model.residuals(x, c);
  double f = p.cwiseProduct(x).squaredNorm() + c.squaredNorm();
  if (!std::isfinite(f)) throw SolverError("Gauss-Newton: objective is not finite at the initial point");
  diag.objective_trace.push_back(f);
  diag.residual_norms.push_back(c.norm());

  for (int iter = 0; iter < config.max_iters; ++iter) {
    model.residuals_and_jacobian(x, c, jac);
    // rhs = -(P^2 x + J^T c) = -grad/2.
    Eigen::VectorXd rhs = -(p.array().square() * x.array()).matrix() - jac.transpose() * c;
    Eigen::VectorXd step;
    try {
      step = solver.solve(jac, rhs);
    } catch (const SolverError& err) {
      throw SolverError("Gauss-Newton iteration " + std::to_string(iter) + ": " + err.what());
    }

    const double step_scale = step.norm() / (1.0 + x.norm());
    if (step_scale < 1e-14) {
      diag.converged = true;
      diag.message = "stationary point: step size below tolerance";
      break;
    }

    // Armijo on the true objective; the GN direction satisfies
    // g^T step = -2 rhs^T step <= 0.
    const double directional = -2.0 * rhs.dot(step);
    double t = 1.0;
    double f_new = f;
    bool accepted = false;
    for (int bt = 0; bt <= config.max_backtracks; ++bt) {
      Eigen::VectorXd x_trial = x + t * step;
      Eigen::VectorXd c_trial;
      model.residuals(x_trial, c_trial);
      const double f_trial = p.cwiseProduct(x_trial).squaredNorm() + c_trial.squaredNorm();
      if (std::isfinite(f_trial) && f_trial <= f + config.armijo_c1 * t * directional) {
        x = std::move(x_trial);
        f_new = f_trial;
        diag.residual_norms.push_back(c_trial.norm());
        accepted = true;
        break;
      }
      t *= config.backtrack;
    }
    if (!accepted) {
      diag.converged = true;
      diag.message = "line search stalled; returning best iterate";
      break;
    }

    ++diag.iterations;
    diag.objective_trace.push_back(f_new);
    const double decrease = f - f_new;
    f = f_new;
    if (decrease <= config.rel_tol * std::max(1.0, std::abs(f))) {
      diag.converged = true;
      diag.message = "relative objective decrease below tolerance";
      break;
    }
  }
  if (diag.message.empty()) {
    diag.converged = false;
    diag.message = "maximum iterations reached";
  }
  return diag;
}

}  // namespace mfggp
