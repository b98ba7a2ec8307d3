#pragma once

#include <Eigen/Core>
#include <array>

#include "core/common.hpp"

namespace mfggp {

/// Differential operator applied to one argument of a kernel (or to a field):
/// identity, a first partial, a mixed second partial, or the Laplacian.
struct DerivOp {
  enum class Kind { Identity, Partial, SecondPartial, Laplacian };

  Kind kind = Kind::Identity;
  int d0 = -1;
  int d1 = -1;

  static DerivOp identity() { return {}; }
  static DerivOp partial(int d) { return {Kind::Partial, d, -1}; }
  // Symmetric in (d, e); stored with d0 <= d1.
  static DerivOp second_partial(int d, int e) {
    return {Kind::SecondPartial, std::min(d, e), std::max(d, e)};
  }
  static DerivOp laplacian() { return {Kind::Laplacian, -1, -1}; }

  int order() const {
    switch (kind) {
      case Kind::Identity: return 0;
      case Kind::Partial: return 1;
      default: return 2;
    }
  }

  bool operator==(const DerivOp&) const = default;
};

/// Stationary product kernel on a torus,
///
///   k(x, y) = prod_d exp(-2 sin^2(pi (x_d - y_d) / P_d) / l_d^2),
///
/// normalized so k(x, x) = 1 and P_d-periodic in every coordinate of either
/// argument. Mixed derivatives up to second order in each argument are
/// evaluated from closed forms (no finite differences).
class PeriodicKernel {
 public:
  PeriodicKernel(int dim, Eigen::VectorXd lengthscales, Eigen::VectorXd periods);

  /// Shared lengthscale across dimensions, unit periods by default.
  static PeriodicKernel isotropic(int dim, double lengthscale, double period = 1.0);

  int dim() const { return dim_; }
  const Eigen::VectorXd& lengthscales() const { return lengthscales_; }
  const Eigen::VectorXd& periods() const { return periods_; }

  double eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;

  /// (op_a acting on the x argument) x (op_b acting on the y argument)
  /// applied to the kernel. Combined order is at most 4 by construction.
  double deriv_eval(const DerivOp& op_a, const Eigen::VectorXd& x,
                    const DerivOp& op_b, const Eigen::VectorXd& y) const;

 private:
  int dim_;
  Eigen::VectorXd lengthscales_;
  Eigen::VectorXd periods_;
};

}  // namespace mfggp
