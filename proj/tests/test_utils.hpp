#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>

#include "core/kernels.hpp"

namespace mfggp::test {

// Central finite-difference application of a DerivOp to a scalar function of
// a point; the independent oracle for analytic kernel derivatives.
inline double fd_apply(const DerivOp& op,
                       const std::function<double(const Eigen::VectorXd&)>& f,
                       const Eigen::VectorXd& x, double h) {
  auto shift = [&](int d, double s) {
    Eigen::VectorXd y = x;
    y[d] += s;
    return y;
  };
  switch (op.kind) {
    case DerivOp::Kind::Identity:
      return f(x);
    case DerivOp::Kind::Partial:
      return (f(shift(op.d0, h)) - f(shift(op.d0, -h))) / (2 * h);
    case DerivOp::Kind::SecondPartial: {
      if (op.d0 == op.d1)
        return (f(shift(op.d0, h)) - 2 * f(x) + f(shift(op.d0, -h))) / (h * h);
      auto shift2 = [&](double s0, double s1) {
        Eigen::VectorXd y = x;
        y[op.d0] += s0;
        y[op.d1] += s1;
        return f(y);
      };
      return (shift2(h, h) - shift2(h, -h) - shift2(-h, h) + shift2(-h, -h)) /
             (4 * h * h);
    }
    case DerivOp::Kind::Laplacian: {
      double acc = 0;
      for (int d = 0; d < x.size(); ++d)
        acc += (f(shift(d, h)) - 2 * f(x) + f(shift(d, -h))) / (h * h);
      return acc;
    }
  }
  return 0;
}

inline double fd_kernel_deriv(const PeriodicKernel& k, const DerivOp& op_a,
                              const Eigen::VectorXd& x, const DerivOp& op_b,
                              const Eigen::VectorXd& y, double h) {
  auto outer = [&](const Eigen::VectorXd& xx) {
    auto inner = [&](const Eigen::VectorXd& yy) { return k.eval(xx, yy); };
    return fd_apply(op_b, inner, y, h);
  };
  return fd_apply(op_a, outer, x, h);
}

inline Eigen::VectorXd vec1(double a) { return Eigen::VectorXd::Constant(1, a); }

inline Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace mfggp::test
