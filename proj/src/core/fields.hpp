#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <optional>

#include "core/gram.hpp"

namespace mfggp {

/// Continuous field reconstructed from a latent block through the representer
/// formula: field(x) = K(x, phi) (K(phi, phi) + eta R)^{-1} latents.
struct RepresenterField {
  std::shared_ptr<const GramSystem> system;
  Eigen::VectorXd coefficients;  // (K + eta R)^{-1} latents, precomputed once

  double eval(const Eigen::VectorXd& x, const DerivOp& op = DerivOp::identity()) const {
    return system->representer_eval(coefficients, x, op);
  }
  double value(const Eigen::VectorXd& x) const { return eval(x); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g(x.size());
    for (int d = 0; d < x.size(); ++d) g[d] = eval(x, DerivOp::partial(d));
    return g;
  }
  double laplacian(const Eigen::VectorXd& x) const { return eval(x, DerivOp::laplacian()); }

  FieldFn as_field_fn() const {
    auto sys = system;
    auto coeffs = coefficients;
    return [sys, coeffs](const Eigen::VectorXd& x, const DerivOp& op) {
      return sys->representer_eval(coeffs, x, op);
    };
  }
};

/// Output of a stationary solve: representer evaluators for the recovered
/// fields, the effective Hamiltonian constant, and the recovered (or known)
/// scalar parameters. The optimal strategy for the quadratic Hamiltonian is
/// the feedback -Du.
struct RecoveredFields {
  RepresenterField u, m;
  std::optional<RepresenterField> v;                     // absent in forward mode
  std::function<double(const Eigen::VectorXd&)> v_known; // set in forward mode
  double hbar = 0.0;
  double nu = 0.0;
  std::optional<double> coupling_alpha;
  std::optional<double> coupling_sigma;

  double v_value(const Eigen::VectorXd& x) const {
    return v ? v->value(x) : v_known(x);
  }
  FieldFn v_fn() const {
    if (v) return v->as_field_fn();
    auto fn = v_known;
    return [fn](const Eigen::VectorXd& x, const DerivOp& op) {
      require(op.kind == DerivOp::Kind::Identity,
              "derivatives of a known potential are not available");
      return fn(x);
    };
  }
  Eigen::VectorXd strategy(const Eigen::VectorXd& x) const { return -u.gradient(x); }
};

}  // namespace mfggp
