#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "core/gauss_newton.hpp"

using namespace mfggp;

namespace {

// F(x) = |P x|^2 + |A x - b|^2: fully quadratic.
class QuadraticModel final : public NlsModel {
 public:
  QuadraticModel(Eigen::MatrixXd a, Eigen::VectorXd b, Eigen::VectorXd prior)
      : a_(std::move(a)), b_(std::move(b)), prior_(std::move(prior)) {}
  Eigen::Index num_vars() const override { return a_.cols(); }
  Eigen::Index num_residuals() const override { return a_.rows(); }
  const Eigen::VectorXd& prior_weights() const override { return prior_; }
  void residuals(const Eigen::VectorXd& x, Eigen::VectorXd& c) const override {
    c = a_ * x - b_;
  }
  void residuals_and_jacobian(const Eigen::VectorXd& x, Eigen::VectorXd& c,
                              Eigen::MatrixXd& jac) const override {
    c = a_ * x - b_;
    jac = a_;
  }

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  Eigen::VectorXd prior_;
};

// Two-variable exponential curve fit: residuals r_i = c0 exp(c1 t_i) - y_i,
// with an unregularized second coordinate to exercise the Schur path.
class CurveFitModel final : public NlsModel {
 public:
  CurveFitModel() {
    t_ = Eigen::VectorXd::LinSpaced(12, 0.0, 1.0);
    y_ = (0.7 * (1.3 * t_.array()).exp()).matrix();
    prior_ = Eigen::VectorXd::Zero(2);
    prior_[0] = 1e-3;  // weak prior on the amplitude, none on the rate
  }
  Eigen::Index num_vars() const override { return 2; }
  Eigen::Index num_residuals() const override { return t_.size(); }
  const Eigen::VectorXd& prior_weights() const override { return prior_; }
  void residuals(const Eigen::VectorXd& x, Eigen::VectorXd& c) const override {
    c = (x[0] * (x[1] * t_.array()).exp() - y_.array()).matrix();
  }
  void residuals_and_jacobian(const Eigen::VectorXd& x, Eigen::VectorXd& c,
                              Eigen::MatrixXd& jac) const override {
    residuals(x, c);
    jac.resize(t_.size(), 2);
    for (Eigen::Index i = 0; i < t_.size(); ++i) {
      const double e = std::exp(x[1] * t_[i]);
      jac(i, 0) = e;
      jac(i, 1) = x[0] * t_[i] * e;
    }
  }

 private:
  Eigen::VectorXd t_, y_, prior_;
};

}  // namespace

TEST_CASE("quadratic problems converge in exactly one iteration") {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(8, 5);
  Eigen::VectorXd b(8);
  for (int i = 0; i < 8; ++i) {
    b[i] = normal(gen);
    for (int j = 0; j < 5; ++j) a(i, j) = normal(gen);
  }
  Eigen::VectorXd prior = Eigen::VectorXd::Ones(5);
  QuadraticModel model(a, b, prior);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(5);
  auto diag = gauss_newton(model, x);
  CHECK(diag.iterations == 1);
  CHECK(diag.converged);

  // The normal-equation minimizer.
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(5, 5) + a.transpose() * a;
  Eigen::VectorXd expect = h.ldlt().solve(a.transpose() * b);
  CHECK((x - expect).norm() < 1e-10);
}

TEST_CASE("nonlinear fit with an unregularized coordinate") {
  CurveFitModel model;
  Eigen::VectorXd x(2);
  x << 1.0, 0.0;
  auto diag = gauss_newton(model, x, {.max_iters = 100, .rel_tol = 1e-14});
  CHECK(diag.converged);
  CHECK(x[0] == doctest::Approx(0.7).epsilon(1e-4));
  CHECK(x[1] == doctest::Approx(1.3).epsilon(1e-4));
  for (std::size_t i = 1; i < diag.objective_trace.size(); ++i)
    CHECK(diag.objective_trace[i] <= diag.objective_trace[i - 1] + 1e-15);
}

TEST_CASE("model gradient matches finite differences") {
  CurveFitModel model;
  Eigen::VectorXd x(2);
  x << 0.9, 0.4;
  const Eigen::VectorXd grad = nls_gradient(model, x);
  for (int d = 0; d < 2; ++d) {
    const double h = 1e-6;
    Eigen::VectorXd xp = x, xm = x;
    xp[d] += h;
    xm[d] -= h;
    const double fd = (nls_objective(model, xp) - nls_objective(model, xm)) / (2 * h);
    CHECK(grad[d] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("non-finite objective at the start is rejected") {
  Eigen::MatrixXd a(1, 1);
  a << 1.0;
  Eigen::VectorXd b(1);
  b << std::numeric_limits<double>::quiet_NaN();
  QuadraticModel model(a, b, Eigen::VectorXd::Ones(1));
  Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
  CHECK_THROWS_AS(gauss_newton(model, x), SolverError);
}
