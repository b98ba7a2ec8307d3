#include "core/kernels.hpp"

#include <cmath>

namespace mfggp {

namespace {

// One derivative "slot" pair: up to two x-side dims and two y-side dims.
// A slot value of -1 means unused.
struct ElementaryTerm {
  std::array<int, 2> x_dims{-1, -1};
  std::array<int, 2> y_dims{-1, -1};
};

// Expands a DerivOp into elementary multi-index terms (the Laplacian becomes
// a sum of pure second partials). Writes dims into the selected side.
template <bool OnX>
int expand_op(const DerivOp& op, int dim, std::array<ElementaryTerm, 8>& out) {
  auto set = [](ElementaryTerm& t, int a, int b) {
    if constexpr (OnX)
      t.x_dims = {a, b};
    else
      t.y_dims = {a, b};
  };
  switch (op.kind) {
    case DerivOp::Kind::Identity:
      set(out[0], -1, -1);
      return 1;
    case DerivOp::Kind::Partial:
      require(op.d0 >= 0 && op.d0 < dim, "DerivOp partial dimension out of range");
      set(out[0], op.d0, -1);
      return 1;
    case DerivOp::Kind::SecondPartial:
      require(op.d0 >= 0 && op.d1 >= 0 && op.d0 < dim && op.d1 < dim,
              "DerivOp second partial dimension out of range");
      set(out[0], op.d0, op.d1);
      return 1;
    case DerivOp::Kind::Laplacian:
      require(dim <= 8, "Laplacian expansion supports at most 8 dimensions");
      for (int d = 0; d < dim; ++d) set(out[d], d, d);
      return dim;
  }
  return 0;
}

// d^k/dt^k of f(t) = exp(b (cos(a t) - 1)) for k = 0..4, via Faa di Bruno on
// exp(g) with g = b cos(a t) - b.
struct FactorDerivs {
  std::array<double, 5> v;
};

FactorDerivs factor_derivs(double t, double a, double b) {
  const double c = std::cos(a * t);
  const double s = std::sin(a * t);
  const double f = std::exp(b * (c - 1.0));
  const double g1 = -b * a * s;
  const double g2 = -b * a * a * c;
  const double g3 = b * a * a * a * s;
  const double g4 = b * a * a * a * a * c;
  FactorDerivs out;
  out.v[0] = f;
  out.v[1] = f * g1;
  out.v[2] = f * (g2 + g1 * g1);
  out.v[3] = f * (g3 + 3.0 * g1 * g2 + g1 * g1 * g1);
  out.v[4] = f * (g4 + 4.0 * g1 * g3 + 3.0 * g2 * g2 + 6.0 * g1 * g1 * g2 +
                  g1 * g1 * g1 * g1);
  return out;
}

}  // namespace

PeriodicKernel::PeriodicKernel(int dim, Eigen::VectorXd lengthscales,
                               Eigen::VectorXd periods)
    : dim_(dim), lengthscales_(std::move(lengthscales)), periods_(std::move(periods)) {
  require(dim_ >= 1, "kernel dimension must be positive");
  require(lengthscales_.size() == dim_, "one lengthscale per dimension required");
  require(periods_.size() == dim_, "one period per dimension required");
  require((lengthscales_.array() > 0).all(), "lengthscales must be positive");
  require((periods_.array() > 0).all(), "periods must be positive");
}

PeriodicKernel PeriodicKernel::isotropic(int dim, double lengthscale, double period) {
  return PeriodicKernel(dim, Eigen::VectorXd::Constant(dim, lengthscale),
                        Eigen::VectorXd::Constant(dim, period));
}

double PeriodicKernel::eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  require(x.size() == dim_ && y.size() == dim_, "kernel argument dimension mismatch");
  double exponent = 0.0;
  for (int d = 0; d < dim_; ++d) {
    const double s = std::sin(M_PI * (x[d] - y[d]) / periods_[d]);
    exponent -= 2.0 * s * s / (lengthscales_[d] * lengthscales_[d]);
  }
  return std::exp(exponent);
}

double PeriodicKernel::deriv_eval(const DerivOp& op_a, const Eigen::VectorXd& x,
                                  const DerivOp& op_b, const Eigen::VectorXd& y) const {
  require(x.size() == dim_ && y.size() == dim_, "kernel argument dimension mismatch");

  std::array<ElementaryTerm, 8> terms_a{}, terms_b{};
  const int na = expand_op<true>(op_a, dim_, terms_a);
  const int nb = expand_op<false>(op_b, dim_, terms_b);

  // Per-dimension tables of d^k f_d / dt^k at t_d = x_d - y_d. Each y-side
  // derivative flips the sign of one d/dt (f is a function of x - y).
  std::array<FactorDerivs, 8> tables;
  require(dim_ <= 8, "kernel derivative evaluation supports at most 8 dimensions");
  for (int d = 0; d < dim_; ++d) {
    const double a = 2.0 * M_PI / periods_[d];
    const double b = 1.0 / (lengthscales_[d] * lengthscales_[d]);
    tables[d] = factor_derivs(x[d] - y[d], a, b);
  }

  double total = 0.0;
  std::array<int, 8> order_x{}, order_y{};
  for (int ia = 0; ia < na; ++ia) {
    for (int ib = 0; ib < nb; ++ib) {
      order_x.fill(0);
      order_y.fill(0);
      for (int s : terms_a[ia].x_dims)
        if (s >= 0) ++order_x[s];
      for (int s : terms_b[ib].y_dims)
        if (s >= 0) ++order_y[s];
      double prod = 1.0;
      for (int d = 0; d < dim_; ++d) {
        const int k = order_x[d] + order_y[d];
        double factor = tables[d].v[k];
        if (order_y[d] % 2 == 1) factor = -factor;
        prod *= factor;
      }
      total += prod;
    }
  }
  return total;
}

}  // namespace mfggp
