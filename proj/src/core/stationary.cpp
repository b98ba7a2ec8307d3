#include "core/stationary.hpp"

#include <cmath>

#include "core/common.hpp"

namespace mfggp {

TorusDomain TorusDomain::unit(int dim, double lo_val, double hi_val) {
  TorusDomain d;
  d.dim = dim;
  d.lo = Eigen::VectorXd::Constant(dim, lo_val);
  d.hi = Eigen::VectorXd::Constant(dim, hi_val);
  return d;
}

namespace {

bool rows_equal(const Eigen::MatrixXd& mat, Eigen::Index i, const Eigen::VectorXd& pt) {
  for (Eigen::Index d = 0; d < pt.size(); ++d)
    if (mat(i, d) != pt[d]) return false;
  return true;
}

// Resolves a point-evaluation feature against the canonical stencil and the
// extras already appended; appends a new extra when unseen.
int resolve_point_eval(std::vector<LinearFunctional>& features, int stencil_size,
                       const Eigen::MatrixXd& collocation, const Eigen::VectorXd& pt) {
  for (Eigen::Index i = 0; i < collocation.rows(); ++i)
    if (rows_equal(collocation, i, pt)) return static_cast<int>(i);
  for (std::size_t e = stencil_size; e < features.size(); ++e)
    if (features[e].kind() == LinearFunctional::Kind::PointEval &&
        features[e].point() == pt)
      return static_cast<int>(e);
  features.push_back(LinearFunctional::point_eval(pt));
  return static_cast<int>(features.size()) - 1;
}

int resolve_functional(std::vector<LinearFunctional>& features, int stencil_size,
                       const Eigen::MatrixXd& collocation, const LinearFunctional& f) {
  if (f.kind() == LinearFunctional::Kind::PointEval)
    return resolve_point_eval(features, stencil_size, collocation, f.point());
  for (std::size_t e = stencil_size; e < features.size(); ++e)
    if (features[e].same_as(f)) return static_cast<int>(e);
  features.push_back(f);
  return static_cast<int>(features.size()) - 1;
}

std::vector<LinearFunctional> stencil_features(const Eigen::MatrixXd& pts, int dim) {
  const Eigen::Index m = pts.rows();
  std::vector<LinearFunctional> out;
  out.reserve(m * (dim + 2));
  for (Eigen::Index i = 0; i < m; ++i)
    out.push_back(LinearFunctional::point_eval(pts.row(i)));
  for (int d = 0; d < dim; ++d)
    for (Eigen::Index i = 0; i < m; ++i)
      out.push_back(LinearFunctional::point_deriv(pts.row(i), DerivOp::partial(d)));
  for (Eigen::Index i = 0; i < m; ++i)
    out.push_back(LinearFunctional::point_deriv(pts.row(i), DerivOp::laplacian()));
  return out;
}

}  // namespace

StationaryLayout build_layout(const StationaryProblemSpec& spec) {
  StationaryLayout lay;
  lay.dim = spec.domain.dim;
  lay.num_points = static_cast<int>(spec.collocation.rows());
  const int stencil = lay.num_points * (lay.dim + 2);

  lay.phi_u = stencil_features(spec.collocation, lay.dim);
  lay.phi_m = stencil_features(spec.collocation, lay.dim);

  lay.m_obs_index.reserve(spec.m_obs.functionals.size());
  for (const auto& f : spec.m_obs.functionals)
    lay.m_obs_index.push_back(resolve_functional(lay.phi_m, stencil, spec.collocation, f));

  if (spec.coupling.kind == CouplingKind::NonlocalGaussian) {
    const auto& nodes = spec.coupling.rule.nodes;
    lay.quad_index.reserve(nodes.rows());
    for (Eigen::Index q = 0; q < nodes.rows(); ++q)
      lay.quad_index.push_back(
          resolve_point_eval(lay.phi_m, stencil, spec.collocation, nodes.row(q)));
  }

  if (!spec.known_potential) {
    lay.phi_v.reserve(lay.num_points + spec.v_obs.functionals.size());
    for (int i = 0; i < lay.num_points; ++i)
      lay.phi_v.push_back(LinearFunctional::point_eval(spec.collocation.row(i)));
    lay.v_obs_index.reserve(spec.v_obs.functionals.size());
    for (const auto& f : spec.v_obs.functionals)
      lay.v_obs_index.push_back(
          resolve_functional(lay.phi_v, lay.num_points, spec.collocation, f));
  }

  if (!spec.viscosity.known) lay.scalar_order.push_back(ScalarParam::Viscosity);
  if (spec.coupling.kind == CouplingKind::PowerLocal && !spec.coupling.known)
    lay.scalar_order.push_back(ScalarParam::CouplingAlpha);
  if (spec.coupling.kind == CouplingKind::NonlocalGaussian && !spec.coupling.known)
    lay.scalar_order.push_back(ScalarParam::CouplingSigma);
  return lay;
}

std::array<std::vector<LinearFunctional>, 3> build_feature_sets(
    const StationaryProblemSpec& spec) {
  StationaryLayout lay = build_layout(spec);
  return {std::move(lay.phi_u), std::move(lay.phi_m), std::move(lay.phi_v)};
}

StationaryProblem::StationaryProblem(StationaryProblemSpec spec) : spec_(std::move(spec)) {
  const int dim = spec_.domain.dim;
  require(dim >= 1, "domain dimension must be positive");
  require(spec_.collocation.rows() >= 1, "at least one collocation point required");
  require(spec_.collocation.cols() == dim, "collocation point dimension mismatch");
  require(spec_.penalties.alpha_pen >= 0, "PDE penalty weight must be nonnegative");
  require(spec_.penalties.beta >= 0, "mean penalty weight must be nonnegative");
  require(spec_.penalties.hbar_prior_weight >= 0, "hbar prior weight must be nonnegative");
  require(spec_.nugget_eta >= 0, "nugget must be nonnegative");
  require(spec_.kernel_u.dim() == dim && spec_.kernel_m.dim() == dim &&
              spec_.kernel_v.dim() == dim,
          "kernel dimension does not match the domain");
  if (!spec_.m_obs.functionals.empty()) {
    require(spec_.m_obs.gamma > 0, "observation noise level must be positive");
    require(spec_.m_obs.data.size() ==
                static_cast<Eigen::Index>(spec_.m_obs.functionals.size()),
            "m observation data length does not match functional count");
  }
  if (!spec_.v_obs.empty()) {
    require(!spec_.known_potential,
            "V observations are meaningless when the potential is known");
    require(spec_.v_obs.data.size() ==
                static_cast<Eigen::Index>(spec_.v_obs.functionals.size()),
            "V observation data length does not match functional count");
    require(spec_.v_obs.noise_std.size() == spec_.v_obs.data.size(),
            "V observation noise vector length mismatch");
    require((spec_.v_obs.noise_std.array() > 0).all(),
            "V observation noise levels must be positive");
  }
  if (spec_.coupling.kind == CouplingKind::NonlocalGaussian) {
    require(spec_.coupling.rule.nodes.rows() > 0, "non-local coupling requires a quadrature rule");
    require(spec_.coupling.rule.nodes.cols() == dim, "quadrature node dimension mismatch");
    require(spec_.coupling.sigma > 0 || !spec_.coupling.known,
            "non-local coupling lengthscale must be positive");
  }
  if (spec_.coupling.kind == CouplingKind::PowerLocal)
    require(spec_.coupling.alpha > 0 || !spec_.coupling.known,
            "local coupling exponent must be positive");

  layout_ = build_layout(spec_);

  gram_u_ = std::make_shared<const GramSystem>(spec_.kernel_u, layout_.phi_u,
                                               spec_.nugget_eta, spec_.threads);
  gram_m_ = std::make_shared<const GramSystem>(spec_.kernel_m, layout_.phi_m,
                                               spec_.nugget_eta, spec_.threads);
  if (!forward_mode())
    gram_v_ = std::make_shared<const GramSystem>(spec_.kernel_v, layout_.phi_v,
                                                 spec_.nugget_eta, spec_.threads);

  if (forward_mode()) {
    v_fixed_.resize(layout_.num_points);
    for (int i = 0; i < layout_.num_points; ++i)
      v_fixed_[i] = spec_.known_potential(spec_.collocation.row(i));
  }

  if (spec_.coupling.kind == CouplingKind::NonlocalGaussian) {
    const auto& nodes = spec_.coupling.rule.nodes;
    const Eigen::VectorXd periods = spec_.domain.periods();
    coupling_r2_.resize(layout_.num_points, nodes.rows());
    for (int i = 0; i < layout_.num_points; ++i) {
      const Eigen::VectorXd xi = spec_.collocation.row(i);
      for (Eigen::Index q = 0; q < nodes.rows(); ++q)
        coupling_r2_(i, q) = coupling_distance_sq(
            xi, nodes.row(q), spec_.coupling.periodic_distance, &periods);
    }
  }
}

const GramSystem& StationaryProblem::gram_v() const {
  require(gram_v_ != nullptr, "no V Gram system in forward mode");
  return *gram_v_;
}

double StationaryProblem::effective_nu(const LatentState& state) const {
  if (spec_.viscosity.known) return spec_.viscosity.nu;
  return std::exp(state.log_scalars.at(ScalarParam::Viscosity));
}

double StationaryProblem::effective_alpha(const LatentState& state) const {
  if (spec_.coupling.known) return spec_.coupling.alpha;
  return std::exp(state.log_scalars.at(ScalarParam::CouplingAlpha));
}

double StationaryProblem::effective_sigma(const LatentState& state) const {
  if (spec_.coupling.known) return spec_.coupling.sigma;
  return std::exp(state.log_scalars.at(ScalarParam::CouplingSigma));
}

LatentState StationaryProblem::initial_state() const {
  LatentState s;
  s.z = Eigen::VectorXd::Zero(layout_.n_u());
  s.rho = Eigen::VectorXd::Zero(layout_.n_m());
  // Uniform density: every m value-class latent starts at one.
  for (int i = 0; i < layout_.n_m(); ++i)
    if (layout_.phi_m[i].kind() == LinearFunctional::Kind::PointEval) s.rho[i] = 1.0;
  for (std::size_t j = 0; j < layout_.m_obs_index.size(); ++j)
    s.rho[layout_.m_obs_index[j]] = spec_.m_obs.data[static_cast<Eigen::Index>(j)];
  s.v = Eigen::VectorXd::Zero(layout_.n_v());
  s.hbar = 0.0;
  for (ScalarParam p : layout_.scalar_order) s.log_scalars[p] = 0.0;
  return s;
}

namespace {

struct CouplingValues {
  Eigen::VectorXd gamma;             // per collocation point
  Eigen::VectorXd d_rho_local;       // PowerLocal: dGamma_i / drho_i
  Eigen::MatrixXd weights_nonlocal;  // NonlocalGaussian: dGamma_i / drho_q
  Eigen::VectorXd d_log_alpha;
  Eigen::VectorXd d_log_sigma;
};

}  // namespace

// The model works in whitened coordinates x = [w_u | w_m | w_v | hbar | theta]
// with z = L_u w_u etc., so the prior rows reduce to the identity and the
// normal equations stay well conditioned.
class StationaryModel final : public NlsModel {
 public:
  explicit StationaryModel(const StationaryProblem& problem)
      : prob_(problem), lay_(problem.layout()) {
    const auto& spec = prob_.spec_;
    n_vars_ = lay_.n_u() + lay_.n_m() + lay_.n_v() + 1 + lay_.n_scalars();
    num_obs_m_ = static_cast<int>(spec.m_obs.functionals.size());
    num_obs_v_ = prob_.forward_mode() ? 0 : static_cast<int>(spec.v_obs.functionals.size());
    const int m = lay_.num_points;
    rows_ = num_obs_m_ + num_obs_v_ + 2 + 2 * m;
    row_mean_u_ = num_obs_m_ + num_obs_v_;
    row_mass_m_ = row_mean_u_ + 1;
    row_hjb_ = row_mass_m_ + 1;
    row_fp_ = row_hjb_ + m;

    prior_.setOnes(n_vars_);
    prior_[hbar_col()] = std::sqrt(spec.penalties.hbar_prior_weight);
    for (int k = 0; k < lay_.n_scalars(); ++k) prior_[scalar_col(k)] = 0.0;

    sqrt_apen_ = std::sqrt(spec.penalties.alpha_pen);
    sqrt_beta_ = std::sqrt(spec.penalties.beta);
  }

  Eigen::Index num_vars() const override { return n_vars_; }
  Eigen::Index num_residuals() const override { return rows_; }
  const Eigen::VectorXd& prior_weights() const override { return prior_; }

  void residuals(const Eigen::VectorXd& x, Eigen::VectorXd& c) const override {
    Eigen::VectorXd s = to_physical(x);
    c.resize(rows_);
    fill_residuals(s, c, nullptr);
  }

  void residuals_and_jacobian(const Eigen::VectorXd& x, Eigen::VectorXd& c,
                              Eigen::MatrixXd& jacobian) const override {
    if (!linear_rows_built_) build_linear_rows();
    Eigen::VectorXd s = to_physical(x);
    c.resize(rows_);
    jacobian.resize(rows_, n_vars_);
    jacobian.topRows(row_hjb_) = linear_rows_;
    jacobian.bottomRows(rows_ - row_hjb_).setZero();
    fill_residuals(s, c, &jacobian);
  }

  // Evaluation straight from physical latents; avoids the whitening round
  // trip (the Cholesky factor is ill conditioned, a solve-then-multiply trip
  // would lose digits).
  void residuals_physical(const Eigen::VectorXd& s, Eigen::VectorXd& c) const {
    c.resize(rows_);
    fill_residuals(s, c, nullptr);
  }

  // Raw PDE rows (no penalty scaling), straight from physical latents.
  Eigen::VectorXd pde_rows_physical(const Eigen::VectorXd& s) const {
    Eigen::VectorXd c(rows_);
    fill_residuals(s, c, nullptr, 1.0);
    return c.tail(rows_ - row_hjb_);
  }

  Eigen::VectorXd pack(const LatentState& state) const {
    Eigen::VectorXd s(n_vars_);
    s.segment(u_off(), lay_.n_u()) = state.z;
    s.segment(m_off(), lay_.n_m()) = state.rho;
    if (lay_.n_v() > 0) s.segment(v_off(), lay_.n_v()) = state.v;
    s[hbar_col()] = state.hbar;
    for (int k = 0; k < lay_.n_scalars(); ++k)
      s[scalar_col(k)] = state.log_scalars.at(lay_.scalar_order[k]);
    return s;
  }

  // Whitened coordinates from a physical latent state and back.
  Eigen::VectorXd whiten(const LatentState& state) const {
    Eigen::VectorXd x(n_vars_);
    x.segment(u_off(), lay_.n_u()) = prob_.gram_u_->factor().solve_lower(state.z);
    x.segment(m_off(), lay_.n_m()) = prob_.gram_m_->factor().solve_lower(state.rho);
    if (lay_.n_v() > 0)
      x.segment(v_off(), lay_.n_v()) = prob_.gram_v_->factor().solve_lower(state.v);
    x[hbar_col()] = state.hbar;
    for (int k = 0; k < lay_.n_scalars(); ++k)
      x[scalar_col(k)] = state.log_scalars.at(lay_.scalar_order[k]);
    return x;
  }

  LatentState unwhiten(const Eigen::VectorXd& x) const {
    LatentState s;
    Eigen::VectorXd phys = to_physical(x);
    s.z = phys.segment(u_off(), lay_.n_u());
    s.rho = phys.segment(m_off(), lay_.n_m());
    s.v = phys.segment(v_off(), lay_.n_v());
    s.hbar = phys[hbar_col()];
    for (int k = 0; k < lay_.n_scalars(); ++k)
      s.log_scalars[lay_.scalar_order[k]] = phys[scalar_col(k)];
    return s;
  }

 private:
  int u_off() const { return 0; }
  int m_off() const { return lay_.n_u(); }
  int v_off() const { return lay_.n_u() + lay_.n_m(); }
  int hbar_col() const { return lay_.n_u() + lay_.n_m() + lay_.n_v(); }
  int scalar_col(int k) const { return hbar_col() + 1 + k; }

  const Eigen::MatrixXd& field_l(int field) const {
    switch (field) {
      case 0: return prob_.gram_u_->factor().matrix_l();
      case 1: return prob_.gram_m_->factor().matrix_l();
      default: return prob_.gram_v_->factor().matrix_l();
    }
  }
  int field_off(int field) const {
    return field == 0 ? u_off() : (field == 1 ? m_off() : v_off());
  }

  Eigen::VectorXd to_physical(const Eigen::VectorXd& x) const {
    Eigen::VectorXd s = x;
    const auto& lu = prob_.gram_u_->factor().matrix_l();
    const auto& lm = prob_.gram_m_->factor().matrix_l();
    s.segment(u_off(), lay_.n_u()) =
        lu.triangularView<Eigen::Lower>() * x.segment(u_off(), lay_.n_u());
    s.segment(m_off(), lay_.n_m()) =
        lm.triangularView<Eigen::Lower>() * x.segment(m_off(), lay_.n_m());
    if (lay_.n_v() > 0) {
      const auto& lv = prob_.gram_v_->factor().matrix_l();
      s.segment(v_off(), lay_.n_v()) =
          lv.triangularView<Eigen::Lower>() * x.segment(v_off(), lay_.n_v());
    }
    return s;
  }

  // Row of the whitened Jacobian for a physical-coordinate entry.
  void add_whitened(Eigen::MatrixXd& jac, int row, int field, int local, double val) const {
    const Eigen::MatrixXd& l = field_l(field);
    jac.row(row).segment(field_off(field), local + 1) +=
        val * l.row(local).head(local + 1);
  }

  void build_linear_rows() const {
    const auto& spec = prob_.spec_;
    linear_rows_.setZero(row_hjb_, n_vars_);
    for (int j = 0; j < num_obs_m_; ++j) {
      const int idx = lay_.m_obs_index[j];
      const double scale = 1.0 / spec.m_obs.gamma;
      const Eigen::MatrixXd& lm = prob_.gram_m_->factor().matrix_l();
      linear_rows_.row(j).segment(m_off(), idx + 1) = scale * lm.row(idx).head(idx + 1);
    }
    for (int j = 0; j < num_obs_v_; ++j) {
      const int idx = lay_.v_obs_index[j];
      const double scale = 1.0 / spec.v_obs.noise_std[j];
      const Eigen::MatrixXd& lv = prob_.gram_v_->factor().matrix_l();
      linear_rows_.row(num_obs_m_ + j).segment(v_off(), idx + 1) =
          scale * lv.row(idx).head(idx + 1);
    }
    const int m = lay_.num_points;
    const double mean_scale = sqrt_beta_ / m;
    const Eigen::MatrixXd& lu = prob_.gram_u_->factor().matrix_l();
    const Eigen::MatrixXd& lm = prob_.gram_m_->factor().matrix_l();
    for (int i = 0; i < m; ++i) {
      linear_rows_.row(row_mean_u_).segment(u_off(), i + 1) +=
          mean_scale * lu.row(lay_.u_value(i)).head(i + 1);
      linear_rows_.row(row_mass_m_).segment(m_off(), i + 1) +=
          mean_scale * lm.row(lay_.m_value(i)).head(i + 1);
    }
    linear_rows_built_ = true;
  }

  CouplingValues eval_coupling(const Eigen::VectorXd& s, bool want_derivs) const {
    const auto& spec = prob_.spec_;
    const int m = lay_.num_points;
    CouplingValues out;
    out.gamma.resize(m);
    const bool alpha_unknown =
        spec.coupling.kind == CouplingKind::PowerLocal && !spec.coupling.known;
    const bool sigma_unknown =
        spec.coupling.kind == CouplingKind::NonlocalGaussian && !spec.coupling.known;

    if (spec.coupling.kind == CouplingKind::PowerLocal) {
      const double alpha = effective(ScalarParam::CouplingAlpha, s, spec.coupling.alpha,
                                     !spec.coupling.known);
      if (want_derivs) {
        out.d_rho_local.resize(m);
        if (alpha_unknown) out.d_log_alpha.resize(m);
      }
      for (int i = 0; i < m; ++i) {
        const double rho = s[m_off() + lay_.m_value(i)];
        const double g = std::pow(rho, alpha);
        out.gamma[i] = g;
        if (want_derivs) {
          out.d_rho_local[i] = alpha * std::pow(rho, alpha - 1.0);
          if (alpha_unknown) out.d_log_alpha[i] = g * std::log(rho) * alpha;
        }
      }
    } else {
      const double sigma = effective(ScalarParam::CouplingSigma, s, spec.coupling.sigma,
                                     !spec.coupling.known);
      const Eigen::Index q_count = spec.coupling.rule.weights.size();
      Eigen::VectorXd rho_quad(q_count);
      for (Eigen::Index q = 0; q < q_count; ++q)
        rho_quad[q] = s[m_off() + lay_.quad_index[q]];
      out.weights_nonlocal =
          (prob_.coupling_r2_ * (-0.5 / (sigma * sigma))).array().exp().matrix();
      for (Eigen::Index q = 0; q < q_count; ++q)
        out.weights_nonlocal.col(q) *= spec.coupling.rule.weights[q];
      out.gamma = out.weights_nonlocal * rho_quad;
      if (want_derivs && sigma_unknown) {
        // d/d(log sigma) of exp(-r^2 / (2 sigma^2)) = (r^2 / sigma^2) * weight.
        out.d_log_sigma =
            (out.weights_nonlocal.array() * prob_.coupling_r2_.array() / (sigma * sigma))
                .matrix() *
            rho_quad;
      }
    }
    return out;
  }

  double effective(ScalarParam p, const Eigen::VectorXd& s, double known_value,
                   bool unknown) const {
    if (!unknown) return known_value;
    for (int k = 0; k < lay_.n_scalars(); ++k)
      if (lay_.scalar_order[k] == p) return std::exp(s[scalar_col(k)]);
    throw SolverError("scalar parameter not in layout");
  }

  void fill_residuals(const Eigen::VectorXd& s, Eigen::VectorXd& c,
                      Eigen::MatrixXd* jac, double pde_scale = -1.0) const {
    const auto& spec = prob_.spec_;
    const double sqrt_apen = pde_scale < 0 ? sqrt_apen_ : pde_scale;
    const int m = lay_.num_points;
    const int dim = lay_.dim;

    for (int j = 0; j < num_obs_m_; ++j)
      c[j] = (s[m_off() + lay_.m_obs_index[j]] - spec.m_obs.data[j]) / spec.m_obs.gamma;
    for (int j = 0; j < num_obs_v_; ++j)
      c[num_obs_m_ + j] =
          (s[v_off() + lay_.v_obs_index[j]] - spec.v_obs.data[j]) / spec.v_obs.noise_std[j];

    double mean_u = 0.0, mean_m = 0.0;
    for (int i = 0; i < m; ++i) {
      mean_u += s[u_off() + lay_.u_value(i)];
      mean_m += s[m_off() + lay_.m_value(i)];
    }
    c[row_mean_u_] = sqrt_beta_ * (mean_u / m);
    c[row_mass_m_] = sqrt_beta_ * (mean_m / m - 1.0);

    const double nu = effective(ScalarParam::Viscosity, s, spec.viscosity.nu,
                                !spec.viscosity.known);
    const bool nu_unknown = !spec.viscosity.known;
    const bool alpha_unknown =
        spec.coupling.kind == CouplingKind::PowerLocal && !spec.coupling.known;
    const bool sigma_unknown =
        spec.coupling.kind == CouplingKind::NonlocalGaussian && !spec.coupling.known;
    const CouplingValues coupling = eval_coupling(s, jac != nullptr);
    const double hbar = s[hbar_col()];
    const bool has_v = lay_.n_v() > 0;

    int col_nu = -1, col_alpha = -1, col_sigma = -1;
    for (int k = 0; k < lay_.n_scalars(); ++k) {
      if (lay_.scalar_order[k] == ScalarParam::Viscosity) col_nu = scalar_col(k);
      if (lay_.scalar_order[k] == ScalarParam::CouplingAlpha) col_alpha = scalar_col(k);
      if (lay_.scalar_order[k] == ScalarParam::CouplingSigma) col_sigma = scalar_col(k);
    }

    Eigen::VectorXd du(dim), dm(dim);
    for (int i = 0; i < m; ++i) {
      const double lap_u = s[u_off() + lay_.u_laplacian(i)];
      const double lap_m = s[m_off() + lay_.m_laplacian(i)];
      const double m_val = s[m_off() + lay_.m_value(i)];
      for (int d = 0; d < dim; ++d) {
        du[d] = s[u_off() + lay_.u_partial(d, i)];
        dm[d] = s[m_off() + lay_.m_partial(d, i)];
      }
      const double v_val = has_v ? s[v_off() + lay_.v_value(i)] : prob_.v_fixed_[i];

      // HJB: -nu lap(u) + |Du|^2/2 + V - Gamma(m) - hbar.
      c[row_hjb_ + i] = sqrt_apen * (-nu * lap_u + 0.5 * du.squaredNorm() + v_val -
                                     coupling.gamma[i] - hbar);
      // FP: -nu lap(m) - (lap(u) m + Du . Dm).
      c[row_fp_ + i] = sqrt_apen * (-nu * lap_m - (lap_u * m_val + du.dot(dm)));

      if (jac == nullptr) continue;
      Eigen::MatrixXd& b = *jac;
      const int rh = row_hjb_ + i;
      const int rf = row_fp_ + i;

      add_whitened(b, rh, 0, lay_.u_laplacian(i), -sqrt_apen * nu);
      for (int d = 0; d < dim; ++d)
        add_whitened(b, rh, 0, lay_.u_partial(d, i), sqrt_apen * du[d]);
      if (spec.coupling.kind == CouplingKind::PowerLocal) {
        add_whitened(b, rh, 1, lay_.m_value(i), -sqrt_apen * coupling.d_rho_local[i]);
      } else {
        for (std::size_t q = 0; q < lay_.quad_index.size(); ++q)
          add_whitened(b, rh, 1, lay_.quad_index[q],
                       -sqrt_apen * coupling.weights_nonlocal(i, static_cast<Eigen::Index>(q)));
      }
      if (has_v) add_whitened(b, rh, 2, lay_.v_value(i), sqrt_apen);
      b(rh, hbar_col()) = -sqrt_apen;
      if (nu_unknown) b(rh, col_nu) = -sqrt_apen * nu * lap_u;
      if (alpha_unknown) b(rh, col_alpha) = -sqrt_apen * coupling.d_log_alpha[i];
      if (sigma_unknown) b(rh, col_sigma) = -sqrt_apen * coupling.d_log_sigma[i];

      add_whitened(b, rf, 0, lay_.u_laplacian(i), -sqrt_apen * m_val);
      for (int d = 0; d < dim; ++d)
        add_whitened(b, rf, 0, lay_.u_partial(d, i), -sqrt_apen * dm[d]);
      add_whitened(b, rf, 1, lay_.m_laplacian(i), -sqrt_apen * nu);
      add_whitened(b, rf, 1, lay_.m_value(i), -sqrt_apen * lap_u);
      for (int d = 0; d < dim; ++d)
        add_whitened(b, rf, 1, lay_.m_partial(d, i), -sqrt_apen * du[d]);
      if (nu_unknown) b(rf, col_nu) = -sqrt_apen * nu * lap_m;
    }
  }

  const StationaryProblem& prob_;
  const StationaryLayout& lay_;
  int n_vars_ = 0;
  int rows_ = 0;
  int num_obs_m_ = 0, num_obs_v_ = 0;
  int row_mean_u_ = 0, row_mass_m_ = 0, row_hjb_ = 0, row_fp_ = 0;
  double sqrt_apen_ = 0.0, sqrt_beta_ = 0.0;
  Eigen::VectorXd prior_;
  // Whitened Jacobian of the linear residual rows; built on first use (pure
  // residual paths never need it). The model itself is used single-threaded.
  mutable Eigen::MatrixXd linear_rows_;
  mutable bool linear_rows_built_ = false;
};

Eigen::VectorXd StationaryProblem::pde_residuals(const LatentState& state) const {
  require(state.z.size() == layout_.n_u() && state.rho.size() == layout_.n_m() &&
              state.v.size() == layout_.n_v(),
          "latent state layout mismatch");
  StationaryModel model(*this);
  return model.pde_rows_physical(model.pack(state));
}

double StationaryProblem::objective(const LatentState& state) const {
  require(state.z.size() == layout_.n_u() && state.rho.size() == layout_.n_m() &&
              state.v.size() == layout_.n_v(),
          "latent state layout mismatch");
  double obj = gram_u_->quadratic_form(state.z) + gram_m_->quadratic_form(state.rho);
  if (layout_.n_v() > 0) obj += gram_v_->quadratic_form(state.v);
  obj += spec_.penalties.hbar_prior_weight * state.hbar * state.hbar;

  for (std::size_t j = 0; j < layout_.m_obs_index.size(); ++j) {
    const double r = state.rho[layout_.m_obs_index[j]] - spec_.m_obs.data[j];
    obj += r * r / (spec_.m_obs.gamma * spec_.m_obs.gamma);
  }
  for (std::size_t j = 0; j < layout_.v_obs_index.size(); ++j) {
    const double r =
        (state.v[layout_.v_obs_index[j]] - spec_.v_obs.data[j]) / spec_.v_obs.noise_std[j];
    obj += r * r;
  }

  const int m = layout_.num_points;
  double mean_u = 0.0, mean_m = 0.0;
  for (int i = 0; i < m; ++i) {
    mean_u += state.z[layout_.u_value(i)];
    mean_m += state.rho[layout_.m_value(i)];
  }
  mean_u /= m;
  mean_m /= m;
  obj += spec_.penalties.beta * mean_u * mean_u;
  obj += spec_.penalties.beta * (mean_m - 1.0) * (mean_m - 1.0);

  obj += spec_.penalties.alpha_pen * pde_residuals(state).squaredNorm();
  return obj;
}

GaussNewtonDiagnostics StationaryProblem::solve(LatentState& state,
                                                const GaussNewtonConfig& config) const {
  StationaryModel model(*this);
  Eigen::VectorXd x = model.whiten(state);
  GaussNewtonDiagnostics diag = gauss_newton(model, x, config);
  state = model.unwhiten(x);
  return diag;
}

RecoveredFields StationaryProblem::reconstruct(const LatentState& state) const {
  RecoveredFields out;
  out.u = RepresenterField{gram_u_, gram_u_->solve(state.z)};
  out.m = RepresenterField{gram_m_, gram_m_->solve(state.rho)};
  if (forward_mode()) {
    out.v_known = spec_.known_potential;
  } else {
    out.v = RepresenterField{gram_v_, gram_v_->solve(state.v)};
  }
  out.hbar = state.hbar;
  out.nu = effective_nu(state);
  if (spec_.coupling.kind == CouplingKind::PowerLocal)
    out.coupling_alpha = effective_alpha(state);
  else
    out.coupling_sigma = effective_sigma(state);
  return out;
}

std::unique_ptr<NlsModel> StationaryProblem::make_model() const {
  return std::make_unique<StationaryModel>(*this);
}

Eigen::VectorXd StationaryProblem::whiten(const LatentState& state) const {
  return StationaryModel(*this).whiten(state);
}

LatentState StationaryProblem::unwhiten(const Eigen::VectorXd& x) const {
  return StationaryModel(*this).unwhiten(x);
}

}  // namespace mfggp
