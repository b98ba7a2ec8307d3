#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "core/kernels.hpp"
#include "test_utils.hpp"

using namespace mfggp;
using mfggp::test::fd_kernel_deriv;
using mfggp::test::vec1;
using mfggp::test::vec2;

TEST_CASE("normalized kernel at zero offset") {
  auto k = PeriodicKernel::isotropic(1, 1.41);
  CHECK(k.eval(vec1(0.0), vec1(0.0)) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("1D half-period value matches the closed form") {
  auto k = PeriodicKernel::isotropic(1, 1.41);
  // exp(-2 / 1.41^2), evaluated independently beforehand.
  CHECK(k.eval(vec1(0.0), vec1(0.5)) ==
        doctest::Approx(0.36568403367484374).epsilon(1e-14));
}

TEST_CASE("2D value is the product of 1D factors") {
  auto k = PeriodicKernel::isotropic(2, 1.0);
  CHECK(k.eval(vec2(0, 0), vec2(0.5, 0.5)) ==
        doctest::Approx(0.01831563888873418).epsilon(1e-14));
}

TEST_CASE("symmetry and periodicity on random pairs") {
  auto k = PeriodicKernel(2, vec2(0.8, 1.3), vec2(1.0, 2.0));
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd x = vec2(unif(gen), unif(gen));
    Eigen::VectorXd y = vec2(unif(gen), unif(gen));
    CHECK(k.eval(x, y) == doctest::Approx(k.eval(y, x)).epsilon(1e-12));
    Eigen::VectorXd shift = vec2(3.0 * 1.0, -2.0 * 2.0);  // lattice of periods
    CHECK(k.eval(x + shift, y + shift) == doctest::Approx(k.eval(x, y)).epsilon(1e-12));
    CHECK(k.eval(x + shift, y) == doctest::Approx(k.eval(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("identity pair equals plain evaluation") {
  auto k = PeriodicKernel::isotropic(2, 0.9);
  auto id = DerivOp::identity();
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x = vec2(unif(gen), unif(gen));
    Eigen::VectorXd y = vec2(unif(gen), unif(gen));
    CHECK(k.deriv_eval(id, x, id, y) == doctest::Approx(k.eval(x, y)).epsilon(1e-15));
  }
}

TEST_CASE("first derivative of a stationary kernel vanishes at zero offset") {
  auto k = PeriodicKernel::isotropic(1, 1.41);
  CHECK(k.deriv_eval(DerivOp::partial(0), vec1(0.3), DerivOp::identity(), vec1(0.3)) ==
        doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("grad-grad diagonal value") {
  auto k = PeriodicKernel::isotropic(1, 1.0);
  // 4 pi^2 for unit lengthscale and period.
  CHECK(k.deriv_eval(DerivOp::partial(0), vec1(0.2), DerivOp::partial(0), vec1(0.2)) ==
        doctest::Approx(39.478417604357434).epsilon(1e-12));
}

TEST_CASE("frozen derivative table, 1D l=0.7 at x=0.13, y=0.48") {
  // Values computed with 30-digit arithmetic ahead of the implementation.
  auto k = PeriodicKernel::isotropic(1, 0.7);
  const Eigen::VectorXd x = vec1(0.13), y = vec1(0.48);
  auto id = DerivOp::identity();
  auto dx = DerivOp::partial(0);
  auto dxx = DerivOp::second_partial(0, 0);
  CHECK(k.deriv_eval(id, x, id, y) == doctest::Approx(0.039149091364191239).epsilon(1e-13));
  CHECK(k.deriv_eval(dx, x, id, y) == doctest::Approx(0.40612817504743747).epsilon(1e-13));
  CHECK(k.deriv_eval(dx, x, dx, y) == doctest::Approx(-6.0671026803609777).epsilon(1e-13));
  CHECK(k.deriv_eval(dxx, x, id, y) == doctest::Approx(6.0671026803609777).epsilon(1e-13));
  CHECK(k.deriv_eval(dxx, x, dx, y) == doctest::Approx(-85.371989260561878).epsilon(1e-13));
  CHECK(k.deriv_eval(dxx, x, dxx, y) == doctest::Approx(1175.420108925364).epsilon(1e-13));
  // In one dimension the Laplacian is the pure second partial.
  CHECK(k.deriv_eval(DerivOp::laplacian(), x, id, y) ==
        doctest::Approx(k.deriv_eval(dxx, x, id, y)).epsilon(1e-15));
}

TEST_CASE("derivatives match central finite differences") {
  auto k = PeriodicKernel(2, vec2(0.8, 1.2), vec2(1.0, 1.0));
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<DerivOp> ops = {DerivOp::identity(),       DerivOp::partial(0),
                              DerivOp::partial(1),       DerivOp::second_partial(0, 0),
                              DerivOp::second_partial(0, 1), DerivOp::laplacian()};
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::VectorXd x = vec2(unif(gen), unif(gen));
    Eigen::VectorXd y = vec2(unif(gen), unif(gen));
    for (const auto& a : ops)
      for (const auto& b : ops) {
        const int order = a.order() + b.order();
        const double h = order >= 4 ? 1e-3 : 1e-4;
        const double tol = order >= 4 ? 1e-3 : 1e-5;
        const double exact = k.deriv_eval(a, x, b, y);
        const double approx = fd_kernel_deriv(k, a, x, b, y, h);
        const double scale = std::max({std::abs(exact), std::abs(approx), 1e-8});
        CHECK(std::abs(exact - approx) / scale < tol);
      }
  }
}

TEST_CASE("swap symmetry of operator pairs") {
  auto k = PeriodicKernel(2, vec2(0.7, 1.1), vec2(1.0, 1.0));
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<DerivOp> ops = {DerivOp::identity(), DerivOp::partial(1),
                              DerivOp::second_partial(0, 1), DerivOp::laplacian()};
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x = vec2(unif(gen), unif(gen));
    Eigen::VectorXd y = vec2(unif(gen), unif(gen));
    for (const auto& a : ops)
      for (const auto& b : ops)
        CHECK(k.deriv_eval(a, x, b, y) ==
              doctest::Approx(k.deriv_eval(b, y, a, x)).epsilon(1e-12));
  }
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(PeriodicKernel::isotropic(1, -1.0), InputError);
  CHECK_THROWS_AS(PeriodicKernel::isotropic(0, 1.0), InputError);
  auto k = PeriodicKernel::isotropic(2, 1.0);
  CHECK_THROWS_AS(k.eval(vec1(0.0), vec2(0.0, 0.0)), InputError);
  CHECK_THROWS_AS(
      k.deriv_eval(DerivOp::partial(5), vec2(0, 0), DerivOp::identity(), vec2(0, 0)),
      InputError);
}
