#include "core/gram.hpp"

#include <cmath>
#include <fstream>

#include "core/common.hpp"

namespace mfggp {

FeatureBlock feature_block_of(const LinearFunctional& f) {
  switch (f.kind()) {
    case LinearFunctional::Kind::PointEval:
      return FeatureBlock::Value;
    case LinearFunctional::Kind::PointDeriv:
      return f.op().order() <= 1 ? FeatureBlock::FirstDeriv : FeatureBlock::SecondDeriv;
    case LinearFunctional::Kind::WeightedSum:
      return FeatureBlock::Integral;
  }
  return FeatureBlock::Value;
}

Eigen::MatrixXd assemble_gram(const PeriodicKernel& kernel,
                              const std::vector<LinearFunctional>& features,
                              unsigned threads) {
  const Eigen::Index n = static_cast<Eigen::Index>(features.size());
  for (const auto& f : features)
    require(f.dim() == kernel.dim(), "feature dimension does not match kernel");

  Eigen::MatrixXd gram(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    for (Eigen::Index j = static_cast<Eigen::Index>(i); j < n; ++j)
      gram(i, j) = features[i].pair(kernel, features[j]);
  }, threads);
  // Bilinear forms are symmetric; fill the lower triangle from the upper.
  for (Eigen::Index i = 1; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j) gram(i, j) = gram(j, i);
  return gram;
}

Eigen::MatrixXd add_nugget(const Eigen::MatrixXd& matrix,
                           const std::vector<FeatureBlock>& blocks, double eta) {
  require(eta >= 0, "nugget parameter must be nonnegative");
  require(static_cast<Eigen::Index>(blocks.size()) == matrix.rows(),
          "one block label per feature required");
  if (eta == 0.0) return matrix;

  std::array<double, 4> block_max{0.0, 0.0, 0.0, 0.0};
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    auto b = static_cast<std::size_t>(blocks[i]);
    block_max[b] = std::max(block_max[b], matrix(i, i));
  }
  Eigen::MatrixXd out = matrix;
  for (Eigen::Index i = 0; i < matrix.rows(); ++i)
    out(i, i) += eta * block_max[static_cast<std::size_t>(blocks[i])];
  return out;
}

namespace {

// Unblocked Cholesky used only to locate the failing pivot for the error
// message after Eigen's factorization reports an issue.
Eigen::Index failing_pivot(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d)) return j;
    d = std::sqrt(d);
    l(j, j) = d;
    for (Eigen::Index i = j + 1; i < n; ++i)
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / d;
  }
  return -1;
}

}  // namespace

CholeskyFactor::CholeskyFactor(const Eigen::MatrixXd& matrix) {
  require(matrix.rows() == matrix.cols(), "Cholesky requires a square matrix");
  Eigen::LLT<Eigen::MatrixXd> llt(matrix);
  if (llt.info() != Eigen::Success) {
    const Eigen::Index pivot = failing_pivot(matrix);
    throw SolverError("Cholesky factorization failed at pivot " +
                      std::to_string(pivot >= 0 ? pivot : matrix.rows() - 1) +
                      ": matrix is not positive definite");
  }
  l_ = llt.matrixL();
}

CholeskyFactor factorize(const Eigen::MatrixXd& matrix) { return CholeskyFactor(matrix); }

Eigen::VectorXd CholeskyFactor::solve(const Eigen::VectorXd& rhs) const {
  require(rhs.size() == l_.rows(), "Cholesky solve size mismatch");
  Eigen::VectorXd w = l_.triangularView<Eigen::Lower>().solve(rhs);
  return l_.triangularView<Eigen::Lower>().transpose().solve(w);
}

Eigen::VectorXd CholeskyFactor::solve_lower(const Eigen::VectorXd& rhs) const {
  require(rhs.size() == l_.rows(), "Cholesky solve size mismatch");
  return l_.triangularView<Eigen::Lower>().solve(rhs);
}

double CholeskyFactor::quadratic_form(const Eigen::VectorXd& rhs) const {
  return solve_lower(rhs).squaredNorm();
}

GramSystem::GramSystem(PeriodicKernel kernel, std::vector<LinearFunctional> features,
                       double eta, unsigned threads)
    : kernel_(std::move(kernel)), features_(std::move(features)), eta_(eta) {
  blocks_.reserve(features_.size());
  for (const auto& f : features_) blocks_.push_back(feature_block_of(f));
  matrix_ = assemble_gram(kernel_, features_, threads);
  regularized_ = add_nugget(matrix_, blocks_, eta_);
  factor_ = std::make_unique<CholeskyFactor>(regularized_);
}

double GramSystem::quadratic_form(const Eigen::VectorXd& z) const {
  return factor_->quadratic_form(z);
}

Eigen::VectorXd GramSystem::solve(const Eigen::VectorXd& rhs) const {
  return factor_->solve(rhs);
}

double GramSystem::representer_eval(const Eigen::VectorXd& coefficients,
                                    const Eigen::VectorXd& x, const DerivOp& op) const {
  require(coefficients.size() == size(), "coefficient vector size mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < size(); ++i) {
    if (coefficients[i] == 0.0) continue;
    acc += coefficients[i] * features_[i].pair_point(kernel_, op, x);
  }
  return acc;
}

void GramSystem::dump(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SolverError("cannot open gram dump file: " + path);
  const char magic[8] = {'M', 'F', 'G', 'G', 'R', 'A', 'M', '1'};
  out.write(magic, 8);
  const std::int64_t n = size();
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(&eta_), sizeof(eta_));
  for (auto b : blocks_) {
    const auto byte = static_cast<std::uint8_t>(b);
    out.write(reinterpret_cast<const char*>(&byte), 1);
  }
  // Row-major payload.
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = regularized_(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
}

}  // namespace mfggp
