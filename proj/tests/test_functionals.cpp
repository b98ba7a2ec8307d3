#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "core/functionals.hpp"
#include "test_utils.hpp"

using namespace mfggp;
using mfggp::test::vec1;
using mfggp::test::vec2;

namespace {

// Polynomial test function with caller-supplied derivatives (1D).
FieldFn square_1d() {
  return [](const Eigen::VectorXd& x, const DerivOp& op) {
    switch (op.order()) {
      case 0: return x[0] * x[0];
      case 1: return 2.0 * x[0];
      default: return 2.0;
    }
  };
}

Box unit_box(int dim) {
  return Box{Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
}

}  // namespace

TEST_CASE("apply point evaluation and derivatives") {
  CHECK(LinearFunctional::point_eval(vec1(0.3)).apply(square_1d()) ==
        doctest::Approx(0.09).epsilon(1e-15));
  CHECK(LinearFunctional::point_deriv(vec1(0.3), DerivOp::second_partial(0, 0))
            .apply(square_1d()) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("weighted sum over a quadrature rule applied to a constant") {
  const QuadratureRule rule = gauss_legendre_rule(5, unit_box(1));
  auto ws = LinearFunctional::weighted_sum(rule.weights, rule.nodes);
  auto one = [](const Eigen::VectorXd&, const DerivOp&) { return 1.0; };
  CHECK(ws.apply(one) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("apply is linear in the function argument") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  auto poly = [](double c0, double c1, double c2) -> FieldFn {
    return [c0, c1, c2](const Eigen::VectorXd& x, const DerivOp& op) {
      switch (op.order()) {
        case 0: return c0 + c1 * x[0] + c2 * x[0] * x[0];
        case 1: return c1 + 2 * c2 * x[0];
        default: return 2 * c2;
      }
    };
  };
  const QuadratureRule rule = gauss_legendre_rule(3, unit_box(1));
  std::vector<LinearFunctional> funcs = {
      LinearFunctional::point_eval(vec1(0.37)),
      LinearFunctional::point_deriv(vec1(0.9), DerivOp::partial(0)),
      LinearFunctional::weighted_sum(rule.weights, rule.nodes)};
  for (int trial = 0; trial < 20; ++trial) {
    const double a = unif(gen), b = unif(gen);
    const double g0 = unif(gen), g1 = unif(gen), g2 = unif(gen);
    const double h0 = unif(gen), h1 = unif(gen), h2 = unif(gen);
    FieldFn g = poly(g0, g1, g2), h = poly(h0, h1, h2);
    FieldFn combo = poly(a * g0 + b * h0, a * g1 + b * h1, a * g2 + b * h2);
    for (const auto& f : funcs)
      CHECK(f.apply(combo) ==
            doctest::Approx(a * f.apply(g) + b * f.apply(h)).epsilon(1e-12));
  }
}

TEST_CASE("two-point Gauss-Legendre rule on [-1, 1]") {
  Box box{-Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)};
  const QuadratureRule rule = gauss_legendre_rule(2, box);
  REQUIRE(rule.nodes.rows() == 2);
  const double node = 1.0 / std::sqrt(3.0);
  CHECK(rule.nodes(0, 0) == doctest::Approx(-node).epsilon(1e-14));
  CHECK(rule.nodes(1, 0) == doctest::Approx(node).epsilon(1e-14));
  CHECK(rule.weights[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(rule.weights[1] == doctest::Approx(1.0).epsilon(1e-14));
  // Exact for cubics: int x^2 = 2/3.
  CHECK(rule.integrate([](const Eigen::VectorXd& x) { return x[0] * x[0]; }) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("30x30 rule on the unit square") {
  const QuadratureRule rule = gauss_legendre_rule(30, unit_box(2));
  CHECK(rule.nodes.rows() == 900);
  CHECK(rule.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((rule.weights.array() > 0).all());
}

TEST_CASE("Gauss-Legendre exactness for high-degree polynomials") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int n : {1, 2, 4, 7}) {
    const QuadratureRule rule = gauss_legendre_rule(n, unit_box(2));
    const int deg = 2 * n - 1;
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::MatrixXd coef(deg + 1, deg + 1);
      for (int i = 0; i <= deg; ++i)
        for (int j = 0; j <= deg; ++j) coef(i, j) = unif(gen);
      auto poly = [&](const Eigen::VectorXd& x) {
        double acc = 0, xi = 1;
        for (int i = 0; i <= deg; ++i, xi *= x[0]) {
          double yj = 1;
          for (int j = 0; j <= deg; ++j, yj *= x[1]) acc += coef(i, j) * xi * yj;
        }
        return acc;
      };
      // int_0^1 x^i dx = 1/(i+1), separably.
      double exact = 0;
      for (int i = 0; i <= deg; ++i)
        for (int j = 0; j <= deg; ++j) exact += coef(i, j) / ((i + 1.0) * (j + 1.0));
      CHECK(rule.integrate(poly) == doctest::Approx(exact).epsilon(1e-10));
    }
  }
}

TEST_CASE("empty quadrature box rejected") {
  Box bad{Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1)};
  CHECK_THROWS_AS(gauss_legendre_rule(2, bad), InputError);
  CHECK_THROWS_AS(gauss_legendre_rule(0, unit_box(1)), InputError);
}

TEST_CASE("nonlocal coupling functional is linear and normalized") {
  const QuadratureRule rule = gauss_legendre_rule(12, unit_box(2));
  auto f = nonlocal_coupling_functional(1e6, rule, vec2(0.3, 0.4));
  auto one = [](const Eigen::VectorXd&, const DerivOp&) { return 1.0; };
  auto two = [](const Eigen::VectorXd&, const DerivOp&) { return 2.0; };
  // Huge sigma: the Gaussian weight is 1 and the functional integrates m.
  CHECK(f.apply(one) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(f.apply(two) == doctest::Approx(2.0 * f.apply(one)).epsilon(1e-14));
}

TEST_CASE("nonlocal coupling against the midpoint-rule oracle") {
  // 400x400 midpoint value of int exp(-|x-y|^2/(2 * 0.5^2)) dy at x=(0.5,0.5),
  // computed ahead of the build: 0.73209418117450799.
  const QuadratureRule rule = gauss_legendre_rule(20, unit_box(2));
  auto f = nonlocal_coupling_functional(0.5, rule, vec2(0.5, 0.5));
  auto one = [](const Eigen::VectorXd&, const DerivOp&) { return 1.0; };
  CHECK(std::abs(f.apply(one) - 0.73209418117450799) < 1e-4);
}

TEST_CASE("nonlocal weights are positive and bounded by the quadrature weights") {
  const QuadratureRule rule = gauss_legendre_rule(8, unit_box(2));
  auto f = nonlocal_coupling_functional(0.3, rule, vec2(0.2, 0.9));
  REQUIRE(f.kind() == LinearFunctional::Kind::WeightedSum);
  for (Eigen::Index q = 0; q < f.weights().size(); ++q) {
    CHECK(f.weights()[q] > 0.0);
    CHECK(f.weights()[q] <= rule.weights[q] * (1 + 1e-15));
  }
}

TEST_CASE("periodic coupling distance wraps to the nearest image") {
  Eigen::VectorXd periods = Eigen::VectorXd::Ones(1);
  CHECK(coupling_distance_sq(vec1(0.05), vec1(0.95), true, &periods) ==
        doctest::Approx(0.01).epsilon(1e-12));
  CHECK(coupling_distance_sq(vec1(0.05), vec1(0.95), false, nullptr) ==
        doctest::Approx(0.81).epsilon(1e-12));
}
