#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "core/gram.hpp"
#include "core/rng.hpp"
#include "test_utils.hpp"

using namespace mfggp;
using mfggp::test::vec1;

namespace {

std::vector<LinearFunctional> diracs_1d(const std::vector<double>& xs) {
  std::vector<LinearFunctional> out;
  for (double x : xs) out.push_back(LinearFunctional::point_eval(vec1(x)));
  return out;
}

}  // namespace

TEST_CASE("assemble: single and duplicated point features") {
  auto k = PeriodicKernel::isotropic(1, 1.41);
  auto single = assemble_gram(k, diracs_1d({0.2}));
  CHECK(single(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

  auto dup = assemble_gram(k, diracs_1d({0.2, 0.2}));
  CHECK(dup.isApprox(Eigen::MatrixXd::Ones(2, 2), 1e-14));
}

TEST_CASE("assemble: off-diagonal equals the kernel value") {
  auto k = PeriodicKernel::isotropic(1, 1.41);
  auto g = assemble_gram(k, diracs_1d({0.0, 0.5}));
  CHECK(g(0, 1) == doctest::Approx(0.36568403367484374).epsilon(1e-13));
  CHECK(g(1, 0) == doctest::Approx(g(0, 1)).epsilon(1e-15));
  CHECK(g(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("assemble: symmetry with derivative and integral features") {
  auto k = PeriodicKernel::isotropic(1, 0.8);
  Box box{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)};
  auto rule = gauss_legendre_rule(4, box);
  std::vector<LinearFunctional> feats = {
      LinearFunctional::point_eval(vec1(0.1)),
      LinearFunctional::point_deriv(vec1(0.4), DerivOp::partial(0)),
      LinearFunctional::point_deriv(vec1(0.7), DerivOp::laplacian()),
      LinearFunctional::weighted_sum(rule.weights, rule.nodes)};
  auto g = assemble_gram(k, feats);
  CHECK((g - g.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  // Spot-check one mixed entry against a direct bilinear expansion.
  double expect = 0;
  for (Eigen::Index q = 0; q < rule.weights.size(); ++q) {
    const Eigen::VectorXd yq = rule.nodes.row(q);
    expect += rule.weights[q] *
              k.deriv_eval(DerivOp::partial(0), vec1(0.4), DerivOp::identity(), yq);
  }
  CHECK(g(1, 3) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("nugget: zero eta leaves the matrix unchanged") {
  Eigen::MatrixXd m(2, 2);
  m << 4, 1, 1, 1;
  auto out = add_nugget(m, {FeatureBlock::Value, FeatureBlock::Value}, 0.0);
  CHECK(out == m);
}

TEST_CASE("nugget: one block scales by the block max diagonal") {
  Eigen::MatrixXd m = Eigen::Vector2d(4.0, 1.0).asDiagonal();
  auto out = add_nugget(m, {FeatureBlock::Value, FeatureBlock::Value}, 1e-2);
  CHECK(out(0, 0) == doctest::Approx(4.04).epsilon(1e-15));
  CHECK(out(1, 1) == doctest::Approx(1.04).epsilon(1e-15));
}

TEST_CASE("nugget: blocks are jittered relative to their own scale") {
  Eigen::MatrixXd m = Eigen::Vector2d(1.0, 100.0).asDiagonal();
  auto out = add_nugget(m, {FeatureBlock::Value, FeatureBlock::FirstDeriv}, 1e-8);
  CHECK(out(0, 0) - 1.0 == doctest::Approx(1e-8).epsilon(1e-10));
  CHECK(out(1, 1) - 100.0 == doctest::Approx(1e-6).epsilon(1e-10));
}

TEST_CASE("factorize: identity and closed-form 2x2") {
  CHECK(factorize(Eigen::MatrixXd::Identity(3, 3))
            .matrix_l()
            .isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-15));
  Eigen::MatrixXd m(2, 2);
  m << 2, 1, 1, 2;
  auto f = factorize(m);
  CHECK(f.matrix_l()(0, 0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(f.matrix_l()(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(f.matrix_l()(1, 1) == doctest::Approx(std::sqrt(1.5)).epsilon(1e-15));
}

TEST_CASE("factorize: indefinite matrix reports the failing pivot") {
  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 2, 1;  // eigenvalues 3, -1
  try {
    factorize(m);
    FAIL("expected a SolverError");
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()).find("pivot 1") != std::string::npos);
  }
}

TEST_CASE("quadratic form") {
  auto id = factorize(Eigen::MatrixXd::Identity(4, 4));
  Eigen::VectorXd z(4);
  z << 1, -2, 3, 0.5;
  CHECK(id.quadratic_form(z) == doctest::Approx(z.squaredNorm()).epsilon(1e-14));
  CHECK(id.quadratic_form(Eigen::VectorXd::Zero(4)) == 0.0);

  Eigen::MatrixXd m(2, 2);
  m << 2, 1, 1, 2;
  CHECK(factorize(m).quadratic_form(Eigen::Vector2d(1, 1)) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("one-point representer") {
  const double eta = 1e-8, datum = 3.0;
  GramSystem sys(PeriodicKernel::isotropic(1, 1.41), diracs_1d({0.2}), eta);
  Eigen::VectorXd coeff = sys.solve(Eigen::VectorXd::Constant(1, datum));
  const double at_point = sys.representer_eval(coeff, vec1(0.2), DerivOp::identity());
  CHECK(std::abs(at_point - datum) <= 2 * eta * std::abs(datum));
  const double away = sys.representer_eval(coeff, vec1(0.7), DerivOp::identity());
  CHECK(away == doctest::Approx(datum * 0.36568403367484374 / (1 + eta)).epsilon(1e-9));
  CHECK(sys.representer_eval(Eigen::VectorXd::Zero(1), vec1(0.9), DerivOp::identity()) ==
        0.0);
}

TEST_CASE("factor round trip and positive definiteness after nugget") {
  Rng rng(21);
  std::vector<double> xs;
  for (int i = 0; i < 12; ++i) xs.push_back(rng.uniform());
  auto feats = diracs_1d(xs);
  for (int i = 0; i < 6; ++i)
    feats.push_back(LinearFunctional::point_deriv(vec1(rng.uniform()), DerivOp::laplacian()));
  GramSystem sys(PeriodicKernel::isotropic(1, 0.7), feats, 1e-8);

  const Eigen::MatrixXd recon = sys.factor().matrix_l() * sys.factor().matrix_l().transpose();
  const double max_diag = sys.regularized_matrix().diagonal().maxCoeff();
  CHECK((recon - sys.regularized_matrix()).cwiseAbs().maxCoeff() <= 1e-10 * max_diag);

  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd z = rng.normal_vector(sys.size());
    CHECK(sys.quadratic_form(z) > 0.0);
  }
}

TEST_CASE("noiseless GP regression sanity") {
  // Sample from the prior at 10 points, regress on those Diracs, and check
  // interpolation plus the textbook quadratic form.
  Rng rng(33);
  std::vector<double> xs;
  for (int i = 0; i < 10; ++i) xs.push_back(rng.uniform());
  auto kernel = PeriodicKernel::isotropic(1, 0.9);
  auto feats = diracs_1d(xs);
  GramSystem sys(kernel, feats, 1e-12);

  const Eigen::MatrixXd k_plain = assemble_gram(kernel, feats);
  Eigen::LLT<Eigen::MatrixXd> llt(k_plain +
                                  1e-13 * Eigen::MatrixXd::Identity(10, 10));
  Eigen::VectorXd y = llt.matrixL() * rng.normal_vector(10);

  Eigen::VectorXd coeff = sys.solve(y);
  for (int i = 0; i < 10; ++i)
    CHECK(std::abs(sys.representer_eval(coeff, vec1(xs[i]), DerivOp::identity()) - y[i]) <
          1e-8);

  const double direct = y.dot(k_plain.fullPivLu().solve(y));
  CHECK(std::abs(sys.quadratic_form(y) - direct) <= 1e-8 * std::max(1.0, direct));
}

TEST_CASE("binary dump layout") {
  GramSystem sys(PeriodicKernel::isotropic(1, 1.0), diracs_1d({0.1, 0.6}), 1e-8);
  const std::string path = "gram_dump_test.bin";
  sys.dump(path);
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  char magic[8];
  in.read(magic, 8);
  CHECK(std::string(magic, 8) == "MFGGRAM1");
  std::int64_t n = 0;
  double eta = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  in.read(reinterpret_cast<char*>(&eta), sizeof(eta));
  CHECK(n == 2);
  CHECK(eta == 1e-8);
  std::uint8_t blocks[2];
  in.read(reinterpret_cast<char*>(blocks), 2);
  CHECK(blocks[0] == 0);
  double entries[4];
  in.read(reinterpret_cast<char*>(entries), sizeof(entries));
  CHECK(entries[0] == sys.regularized_matrix()(0, 0));
  CHECK(entries[1] == sys.regularized_matrix()(0, 1));
  std::remove(path.c_str());
}
