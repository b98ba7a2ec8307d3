#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "core/kernels.hpp"

namespace mfggp {

/// Field probe used when applying functionals to explicit test functions and
/// when evaluating reconstructed fields: value or derivative at a point.
using FieldFn = std::function<double(const Eigen::VectorXd&, const DerivOp&)>;

/// Bounded linear functional on an RKHS: a Dirac, a derivative-composed
/// Dirac, or a finite weighted sum of Diracs (quadrature-style). Every
/// functional carries the point(s) it references so Gram assembly can resolve
/// it against a kernel.
class LinearFunctional {
 public:
  enum class Kind { PointEval, PointDeriv, WeightedSum };

  static LinearFunctional point_eval(Eigen::VectorXd x);
  static LinearFunctional point_deriv(Eigen::VectorXd x, DerivOp op);
  /// terms (w_i, PointEval(y_i)) with y_i the rows of points.
  static LinearFunctional weighted_sum(Eigen::VectorXd weights, Eigen::MatrixXd points);

  Kind kind() const { return kind_; }
  int dim() const;
  const Eigen::VectorXd& point() const { return point_; }
  const DerivOp& op() const { return op_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const Eigen::MatrixXd& points() const { return points_; }

  /// [f, g]; linear in g. Derivatives of g are supplied by the caller.
  double apply(const FieldFn& g) const;

  /// Kernel bilinear form of this and another functional; the Gram entry.
  double pair(const PeriodicKernel& k, const LinearFunctional& other) const;

  /// (op (x) this) applied to the kernel at x; the representer basis value.
  double pair_point(const PeriodicKernel& k, const DerivOp& op,
                    const Eigen::VectorXd& x) const;

  bool same_as(const LinearFunctional& other) const;

 private:
  Kind kind_ = Kind::PointEval;
  Eigen::VectorXd point_;
  DerivOp op_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd points_;
};

struct Box {
  Eigen::VectorXd lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
  double volume() const { return (hi - lo).prod(); }
};

/// Tensor-product quadrature: weights are positive and sum to the volume of
/// the integration domain.
struct QuadratureRule {
  Eigen::MatrixXd nodes;    // one row per node
  Eigen::VectorXd weights;

  double integrate(const std::function<double(const Eigen::VectorXd&)>& f) const;
};

/// Tensor-product Gauss-Legendre rule mapped affinely to the box; exact for
/// polynomials of per-dimension degree <= 2 n_per_dim - 1.
QuadratureRule gauss_legendre_rule(int n_per_dim, const Box& domain);

/// Quadrature discretization of m -> int exp(-|x - y|^2 / (2 sigma^2)) m(y) dy
/// as a WeightedSum of point evaluations at the rule's nodes. The distance is
/// the plain Euclidean difference on the fundamental domain unless
/// periodic_distance is set, in which case each coordinate difference is
/// wrapped to the nearest period image.
LinearFunctional nonlocal_coupling_functional(double sigma, const QuadratureRule& rule,
                                              const Eigen::VectorXd& x,
                                              bool periodic_distance = false,
                                              const Eigen::VectorXd* periods = nullptr);

/// Squared distance used by the non-local coupling weight.
double coupling_distance_sq(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                            bool periodic_distance, const Eigen::VectorXd* periods);

}  // namespace mfggp
