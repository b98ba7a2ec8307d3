#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "core/functionals.hpp"

namespace mfggp {

/// Derivative-order class of a feature. The nugget jitters each block
/// relative to the block's own diagonal scale.
enum class FeatureBlock : std::uint8_t {
  Value = 0,
  FirstDeriv = 1,
  SecondDeriv = 2,
  Integral = 3,
};

FeatureBlock feature_block_of(const LinearFunctional& f);

/// K(phi, phi): entry (i, j) is the kernel bilinear form of features i and j.
Eigen::MatrixXd assemble_gram(const PeriodicKernel& kernel,
                              const std::vector<LinearFunctional>& features,
                              unsigned threads = 0);

/// matrix + eta R with R diagonal; within each block b, R_ii is the maximum
/// Gram diagonal over block b. Returns the input unchanged when eta == 0.
Eigen::MatrixXd add_nugget(const Eigen::MatrixXd& matrix,
                           const std::vector<FeatureBlock>& blocks, double eta);

/// Lower-triangular Cholesky factor, computed once and reused. Throws
/// SolverError naming the failing pivot index on indefinite input.
class CholeskyFactor {
 public:
  explicit CholeskyFactor(const Eigen::MatrixXd& matrix);

  const Eigen::MatrixXd& matrix_l() const { return l_; }
  Eigen::Index size() const { return l_.rows(); }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::VectorXd solve_lower(const Eigen::VectorXd& rhs) const;  // L w = rhs
  /// rhs^T (L L^T)^{-1} rhs via one triangular solve.
  double quadratic_form(const Eigen::VectorXd& rhs) const;

 private:
  Eigen::MatrixXd l_;
};

CholeskyFactor factorize(const Eigen::MatrixXd& matrix);

/// Factorized, nugget-regularized operator-valued Gram matrix together with
/// the kernel and feature list it was assembled from. Immutable after
/// construction; solves allocate their own workspace and are safe to call
/// concurrently.
class GramSystem {
 public:
  GramSystem(PeriodicKernel kernel, std::vector<LinearFunctional> features,
             double eta, unsigned threads = 0);

  const PeriodicKernel& kernel() const { return kernel_; }
  const std::vector<LinearFunctional>& features() const { return features_; }
  const std::vector<FeatureBlock>& blocks() const { return blocks_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }               // pre-nugget
  const Eigen::MatrixXd& regularized_matrix() const { return regularized_; }
  double eta() const { return eta_; }
  Eigen::Index size() const { return matrix_.rows(); }
  const CholeskyFactor& factor() const { return *factor_; }

  /// z^T (K + eta R)^{-1} z; nonnegative.
  double quadratic_form(const Eigen::VectorXd& z) const;
  /// (K + eta R)^{-1} rhs; the representer coefficients for a latent block.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  /// sum_i c_i (op (x) feature_i applied to the kernel)(x, .), i.e. the
  /// reconstructed field (or its derivative) at x.
  double representer_eval(const Eigen::VectorXd& coefficients, const Eigen::VectorXd& x,
                          const DerivOp& op) const;

  /// Debug dump: header (magic, N, eta, block labels) then the regularized
  /// matrix as a flat row-major array of doubles.
  void dump(const std::string& path) const;

 private:
  PeriodicKernel kernel_;
  std::vector<LinearFunctional> features_;
  std::vector<FeatureBlock> blocks_;
  Eigen::MatrixXd matrix_;
  Eigen::MatrixXd regularized_;
  double eta_;
  std::unique_ptr<CholeskyFactor> factor_;
};

}  // namespace mfggp
