#include "core/functionals.hpp"

#include <cmath>

namespace mfggp {

LinearFunctional LinearFunctional::point_eval(Eigen::VectorXd x) {
  LinearFunctional f;
  f.kind_ = Kind::PointEval;
  f.point_ = std::move(x);
  return f;
}

LinearFunctional LinearFunctional::point_deriv(Eigen::VectorXd x, DerivOp op) {
  LinearFunctional f;
  f.kind_ = Kind::PointDeriv;
  f.point_ = std::move(x);
  f.op_ = op;
  return f;
}

LinearFunctional LinearFunctional::weighted_sum(Eigen::VectorXd weights,
                                                Eigen::MatrixXd points) {
  require(weights.size() == points.rows(), "one weight per point required");
  require(weights.allFinite(), "weighted sum requires finite weights");
  LinearFunctional f;
  f.kind_ = Kind::WeightedSum;
  f.weights_ = std::move(weights);
  f.points_ = std::move(points);
  return f;
}

int LinearFunctional::dim() const {
  return kind_ == Kind::WeightedSum ? static_cast<int>(points_.cols())
                                    : static_cast<int>(point_.size());
}

double LinearFunctional::apply(const FieldFn& g) const {
  switch (kind_) {
    case Kind::PointEval:
      return g(point_, DerivOp::identity());
    case Kind::PointDeriv:
      return g(point_, op_);
    case Kind::WeightedSum: {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < weights_.size(); ++i)
        acc += weights_[i] * g(points_.row(i), DerivOp::identity());
      return acc;
    }
  }
  return 0.0;
}

double LinearFunctional::pair(const PeriodicKernel& k, const LinearFunctional& other) const {
  // WeightedSum features expand bilinearly over their terms.
  if (kind_ == Kind::WeightedSum) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < weights_.size(); ++i) {
      const Eigen::VectorXd yi = points_.row(i);
      acc += weights_[i] * other.pair_point(k, DerivOp::identity(), yi);
    }
    return acc;
  }
  return other.pair_point(k, op_, point_);
}

double LinearFunctional::pair_point(const PeriodicKernel& k, const DerivOp& op,
                                    const Eigen::VectorXd& x) const {
  switch (kind_) {
    case Kind::PointEval:
      return k.deriv_eval(op, x, DerivOp::identity(), point_);
    case Kind::PointDeriv:
      return k.deriv_eval(op, x, op_, point_);
    case Kind::WeightedSum: {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < weights_.size(); ++i) {
        const Eigen::VectorXd yi = points_.row(i);
        acc += weights_[i] * k.deriv_eval(op, x, DerivOp::identity(), yi);
      }
      return acc;
    }
  }
  return 0.0;
}

bool LinearFunctional::same_as(const LinearFunctional& other) const {
  if (kind_ != other.kind_) return false;
  switch (kind_) {
    case Kind::PointEval:
      return point_ == other.point_;
    case Kind::PointDeriv:
      return op_ == other.op_ && point_ == other.point_;
    case Kind::WeightedSum:
      return weights_ == other.weights_ && points_ == other.points_;
  }
  return false;
}

double QuadratureRule::integrate(
    const std::function<double(const Eigen::VectorXd&)>& f) const {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) acc += weights[i] * f(nodes.row(i));
  return acc;
}

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on the
// Legendre recurrence; accurate to machine precision for the orders used.
void gauss_legendre_1d(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  nodes.resize(n);
  weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

}  // namespace

QuadratureRule gauss_legendre_rule(int n_per_dim, const Box& domain) {
  require(n_per_dim >= 1, "quadrature order must be at least 1");
  const int dim = domain.dim();
  require(dim >= 1, "quadrature domain must have positive dimension");
  require(((domain.hi - domain.lo).array() > 0).all(), "empty quadrature box");

  Eigen::VectorXd x1, w1;
  gauss_legendre_1d(n_per_dim, x1, w1);

  Eigen::Index total = 1;
  for (int d = 0; d < dim; ++d) total *= n_per_dim;

  QuadratureRule rule;
  rule.nodes.resize(total, dim);
  rule.weights.resize(total);
  std::vector<int> idx(dim, 0);
  for (Eigen::Index q = 0; q < total; ++q) {
    double w = 1.0;
    for (int d = 0; d < dim; ++d) {
      const double half = 0.5 * (domain.hi[d] - domain.lo[d]);
      rule.nodes(q, d) = domain.lo[d] + half * (x1[idx[d]] + 1.0);
      w *= half * w1[idx[d]];
    }
    rule.weights[q] = w;
    for (int d = dim - 1; d >= 0; --d) {
      if (++idx[d] < n_per_dim) break;
      idx[d] = 0;
    }
  }
  return rule;
}

double coupling_distance_sq(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                            bool periodic_distance, const Eigen::VectorXd* periods) {
  if (!periodic_distance) return (x - y).squaredNorm();
  require(periods != nullptr, "periodic coupling distance requires periods");
  double acc = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const double p = (*periods)[d];
    double t = std::fmod(x[d] - y[d], p);
    if (t > 0.5 * p) t -= p;
    if (t < -0.5 * p) t += p;
    acc += t * t;
  }
  return acc;
}

LinearFunctional nonlocal_coupling_functional(double sigma, const QuadratureRule& rule,
                                              const Eigen::VectorXd& x,
                                              bool periodic_distance,
                                              const Eigen::VectorXd* periods) {
  require(sigma > 0, "coupling lengthscale must be positive");
  Eigen::VectorXd w(rule.weights.size());
  for (Eigen::Index q = 0; q < w.size(); ++q) {
    const Eigen::VectorXd yq = rule.nodes.row(q);
    const double r2 = coupling_distance_sq(x, yq, periodic_distance, periods);
    w[q] = rule.weights[q] * std::exp(-r2 / (2.0 * sigma * sigma));
  }
  return LinearFunctional::weighted_sum(std::move(w), rule.nodes);
}

}  // namespace mfggp
