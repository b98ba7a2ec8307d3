#include "core/timedep.hpp"

#include <cmath>

#include "core/common.hpp"

namespace mfggp {

namespace {

// Shares the stationary module's dedup policy. The stationary builder is not
// reused directly because the time-dependent stencil has no V stencil tied to
// an unknown-potential flag combination worth unifying.
int resolve_td_point(std::vector<LinearFunctional>& features, int stencil_size,
                     const Eigen::MatrixXd& collocation, const Eigen::VectorXd& pt) {
  for (Eigen::Index i = 0; i < collocation.rows(); ++i) {
    bool same = true;
    for (Eigen::Index d = 0; d < pt.size(); ++d)
      if (collocation(i, d) != pt[d]) {
        same = false;
        break;
      }
    if (same) return static_cast<int>(i);
  }
  for (std::size_t e = stencil_size; e < features.size(); ++e)
    if (features[e].kind() == LinearFunctional::Kind::PointEval &&
        features[e].point() == pt)
      return static_cast<int>(e);
  features.push_back(LinearFunctional::point_eval(pt));
  return static_cast<int>(features.size()) - 1;
}

int resolve_td_functional(std::vector<LinearFunctional>& features, int stencil_size,
                          const Eigen::MatrixXd& collocation, const LinearFunctional& f) {
  if (f.kind() == LinearFunctional::Kind::PointEval)
    return resolve_td_point(features, stencil_size, collocation, f.point());
  for (std::size_t e = stencil_size; e < features.size(); ++e)
    if (features[e].same_as(f)) return static_cast<int>(e);
  features.push_back(f);
  return static_cast<int>(features.size()) - 1;
}

std::vector<LinearFunctional> td_stencil(const Eigen::MatrixXd& pts, int dim) {
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

TimeDependentProblem::TimeDependentProblem(TimeDependentProblemSpec spec)
    : spec_(std::move(spec)) {
  const int dim = spec_.domain.dim;
  const int m = static_cast<int>(spec_.collocation.rows());
  require(spec_.n_time >= 1, "at least one time interval required");
  require(spec_.horizon > 0, "horizon must be positive");
  require(m >= 1 && spec_.collocation.cols() == dim, "collocation points invalid");
  require(static_cast<bool>(spec_.terminal_cost), "terminal cost required");
  require(static_cast<bool>(spec_.initial_density), "initial density required");
  require(spec_.alpha_pen >= 0, "PDE penalty weight must be nonnegative");
  const int slices = spec_.n_time + 1;
  require(spec_.kernels_u.size() == 1 ||
              static_cast<int>(spec_.kernels_u.size()) == slices,
          "kernels_u must be shared (one entry) or per slice");
  require(spec_.kernels_m.size() == 1 ||
              static_cast<int>(spec_.kernels_m.size()) == slices,
          "kernels_m must be shared (one entry) or per slice");
  if (!spec_.m_obs_functionals.empty()) {
    require(spec_.m_obs_data.rows() == slices,
            "m observation data must have one row per time slice");
    require(spec_.m_obs_data.cols() ==
                static_cast<Eigen::Index>(spec_.m_obs_functionals.size()),
            "m observation data column count mismatch");
    require(spec_.m_obs_gamma.size() == slices, "one noise level per slice required");
    require((spec_.m_obs_gamma.array() > 0).all(), "observation noise must be positive");
  }
  if (!spec_.v_obs.empty()) {
    require(!spec_.known_potential, "V observations with a known potential");
    require(spec_.shared_potential,
            "V observations require the shared (time-independent) potential");
    require(spec_.v_obs.data.size() ==
                static_cast<Eigen::Index>(spec_.v_obs.functionals.size()),
            "V observation data length mismatch");
    require(spec_.v_obs.noise_std.size() == spec_.v_obs.data.size() &&
                (spec_.v_obs.noise_std.array() > 0).all(),
            "V observation noise vector invalid");
  }
  if (spec_.coupling.kind == CouplingKind::NonlocalGaussian)
    require(spec_.coupling.rule.nodes.rows() > 0 &&
                spec_.coupling.rule.nodes.cols() == dim,
            "non-local coupling requires a quadrature rule on the domain");

  // Layout.
  layout_.dim = dim;
  layout_.num_points = m;
  layout_.n_time = spec_.n_time;
  const int stencil = m * (dim + 2);
  layout_.phi_u = td_stencil(spec_.collocation, dim);
  layout_.phi_m = td_stencil(spec_.collocation, dim);
  for (const auto& f : spec_.m_obs_functionals)
    layout_.m_obs_index.push_back(
        resolve_td_functional(layout_.phi_m, stencil, spec_.collocation, f));
  if (spec_.coupling.kind == CouplingKind::NonlocalGaussian) {
    const auto& nodes = spec_.coupling.rule.nodes;
    for (Eigen::Index q = 0; q < nodes.rows(); ++q)
      layout_.quad_index.push_back(
          resolve_td_point(layout_.phi_m, stencil, spec_.collocation, nodes.row(q)));
  }
  if (!spec_.known_potential) {
    for (int i = 0; i < m; ++i)
      layout_.phi_v.push_back(LinearFunctional::point_eval(spec_.collocation.row(i)));
    for (const auto& f : spec_.v_obs.functionals)
      layout_.v_obs_index.push_back(
          resolve_td_functional(layout_.phi_v, m, spec_.collocation, f));
    layout_.num_v_blocks = spec_.shared_potential ? 1 : spec_.n_time;
  }
  if (!spec_.viscosity.known) layout_.scalar_order.push_back(ScalarParam::Viscosity);
  if (spec_.coupling.kind == CouplingKind::PowerLocal && !spec_.coupling.known)
    layout_.scalar_order.push_back(ScalarParam::CouplingAlpha);
  if (spec_.coupling.kind == CouplingKind::NonlocalGaussian && !spec_.coupling.known)
    layout_.scalar_order.push_back(ScalarParam::CouplingSigma);

  // Gram systems: identical feature sets share one factorization when the
  // kernel is shared; otherwise assemble per slice in parallel.
  auto build_many = [&](const std::vector<PeriodicKernel>& kernels,
                        const std::vector<LinearFunctional>& feats) {
    std::vector<std::shared_ptr<const GramSystem>> out(kernels.size());
    if (kernels.size() == 1) {
      out[0] = std::make_shared<const GramSystem>(kernels[0], feats, spec_.nugget_eta,
                                                  spec_.threads);
    } else {
      parallel_for(kernels.size(), [&](std::size_t k) {
        out[k] = std::make_shared<const GramSystem>(kernels[k], feats, spec_.nugget_eta, 1);
      }, spec_.threads);
    }
    return out;
  };
  gram_u_ = build_many(spec_.kernels_u, layout_.phi_u);
  gram_m_ = build_many(spec_.kernels_m, layout_.phi_m);
  if (!spec_.known_potential)
    gram_v_ = std::make_shared<const GramSystem>(spec_.kernel_v, layout_.phi_v,
                                                 spec_.nugget_eta, spec_.threads);

  terminal_values_.resize(m);
  initial_values_.resize(m);
  for (int i = 0; i < m; ++i) {
    terminal_values_[i] = spec_.terminal_cost(spec_.collocation.row(i));
    initial_values_[i] = spec_.initial_density(spec_.collocation.row(i));
  }
  if (spec_.known_potential) {
    v_fixed_.resize(m);
    for (int i = 0; i < m; ++i) v_fixed_[i] = spec_.known_potential(spec_.collocation.row(i));
  }
  if (spec_.coupling.kind == CouplingKind::NonlocalGaussian) {
    const auto& nodes = spec_.coupling.rule.nodes;
    const Eigen::VectorXd periods = spec_.domain.periods();
    coupling_r2_.resize(m, nodes.rows());
    for (int i = 0; i < m; ++i) {
      const Eigen::VectorXd xi = spec_.collocation.row(i);
      for (Eigen::Index q = 0; q < nodes.rows(); ++q)
        coupling_r2_(i, q) = coupling_distance_sq(
            xi, nodes.row(q), spec_.coupling.periodic_distance, &periods);
    }
  }
}

double TimeDependentProblem::effective_nu(const TimeSlicedLatentState& state) const {
  if (spec_.viscosity.known) return spec_.viscosity.nu;
  return std::exp(state.log_scalars.at(ScalarParam::Viscosity));
}

TimeSlicedLatentState TimeDependentProblem::initial_state() const {
  const int slices = spec_.n_time + 1;
  TimeSlicedLatentState s;
  s.z.assign(slices, Eigen::VectorXd::Zero(layout_.n_u()));
  s.rho.assign(slices, Eigen::VectorXd::Zero(layout_.n_m()));
  for (int k = 0; k < slices; ++k)
    for (int i = 0; i < layout_.n_m(); ++i)
      if (layout_.phi_m[i].kind() == LinearFunctional::Kind::PointEval) s.rho[k][i] = 1.0;
  // Hard-row data makes a consistent start: u_{N_T} at the terminal cost and
  // m_0 at the initial density, observation latents at the data.
  for (int i = 0; i < layout_.num_points; ++i) {
    s.z[spec_.n_time][layout_.u_value(i)] = terminal_values_[i];
    s.rho[0][layout_.m_value(i)] = initial_values_[i];
  }
  for (int k = 0; k < slices; ++k)
    for (std::size_t j = 0; j < layout_.m_obs_index.size(); ++j)
      s.rho[k][layout_.m_obs_index[j]] =
          spec_.m_obs_data(k, static_cast<Eigen::Index>(j));
  s.v.assign(layout_.num_v_blocks, Eigen::VectorXd::Zero(layout_.n_v()));
  for (ScalarParam p : layout_.scalar_order) s.log_scalars[p] = 0.0;
  return s;
}

// Whitened model over [w_u_0..w_u_NT | w_m_0..w_m_NT | w_v blocks | theta].
class TimeDependentModel final : public NlsModel {
 public:
  explicit TimeDependentModel(const TimeDependentProblem& problem)
      : prob_(problem), lay_(problem.layout()) {
    const auto& spec = prob_.spec_;
    const int slices = spec.n_time + 1;
    const int m = lay_.num_points;
    n_vars_ = slices * (lay_.n_u() + lay_.n_m()) + lay_.num_v_blocks * lay_.n_v() +
              lay_.n_scalars();
    num_obs_m_ = static_cast<int>(spec.m_obs_functionals.size());
    num_obs_v_ = prob_.forward_mode() ? 0 : static_cast<int>(spec.v_obs.functionals.size());
    row_hjb_ = slices * num_obs_m_ + num_obs_v_;
    row_fp_ = row_hjb_ + spec.n_time * m;
    row_terminal_ = row_fp_ + spec.n_time * m;
    row_initial_ = row_terminal_ + m;
    rows_ = row_initial_ + m;

    prior_.setOnes(n_vars_);
    for (int k = 0; k < lay_.n_scalars(); ++k) prior_[scalar_col(k)] = 0.0;
    sqrt_apen_ = std::sqrt(spec.alpha_pen);
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

  void residuals_physical(const Eigen::VectorXd& s, Eigen::VectorXd& c) const {
    c.resize(rows_);
    fill_residuals(s, c, nullptr);
  }

  // Raw scheme rows (no penalty scaling) from physical latents.
  Eigen::VectorXd scheme_rows_physical(const Eigen::VectorXd& s) const {
    Eigen::VectorXd c(rows_);
    fill_residuals(s, c, nullptr, 1.0);
    return c.tail(rows_ - row_hjb_);
  }

  Eigen::VectorXd pack(const TimeSlicedLatentState& state) const {
    const int slices = prob_.spec_.n_time + 1;
    require(static_cast<int>(state.z.size()) == slices &&
                static_cast<int>(state.rho.size()) == slices &&
                static_cast<int>(state.v.size()) == lay_.num_v_blocks,
            "time-sliced latent state layout mismatch");
    Eigen::VectorXd s(n_vars_);
    for (int k = 0; k < slices; ++k) {
      require(state.z[k].size() == lay_.n_u() && state.rho[k].size() == lay_.n_m(),
              "slice latent size mismatch");
      s.segment(u_off(k), lay_.n_u()) = state.z[k];
      s.segment(m_off(k), lay_.n_m()) = state.rho[k];
    }
    for (int b = 0; b < lay_.num_v_blocks; ++b) {
      require(state.v[b].size() == lay_.n_v(), "V latent size mismatch");
      s.segment(v_off(b), lay_.n_v()) = state.v[b];
    }
    for (int k = 0; k < lay_.n_scalars(); ++k)
      s[scalar_col(k)] = state.log_scalars.at(lay_.scalar_order[k]);
    return s;
  }

  Eigen::VectorXd whiten(const TimeSlicedLatentState& state) const {
    Eigen::VectorXd s = pack(state);
    Eigen::VectorXd x = s;
    const int slices = prob_.spec_.n_time + 1;
    for (int k = 0; k < slices; ++k) {
      x.segment(u_off(k), lay_.n_u()) =
          prob_.gram_u(k).factor().solve_lower(s.segment(u_off(k), lay_.n_u()));
      x.segment(m_off(k), lay_.n_m()) =
          prob_.gram_m(k).factor().solve_lower(s.segment(m_off(k), lay_.n_m()));
    }
    for (int b = 0; b < lay_.num_v_blocks; ++b)
      x.segment(v_off(b), lay_.n_v()) =
          prob_.gram_v_->factor().solve_lower(s.segment(v_off(b), lay_.n_v()));
    return x;
  }

  TimeSlicedLatentState unwhiten(const Eigen::VectorXd& x) const {
    Eigen::VectorXd s = to_physical(x);
    TimeSlicedLatentState state;
    const int slices = prob_.spec_.n_time + 1;
    state.z.resize(slices);
    state.rho.resize(slices);
    for (int k = 0; k < slices; ++k) {
      state.z[k] = s.segment(u_off(k), lay_.n_u());
      state.rho[k] = s.segment(m_off(k), lay_.n_m());
    }
    state.v.resize(lay_.num_v_blocks);
    for (int b = 0; b < lay_.num_v_blocks; ++b)
      state.v[b] = s.segment(v_off(b), lay_.n_v());
    for (int k = 0; k < lay_.n_scalars(); ++k)
      state.log_scalars[lay_.scalar_order[k]] = x[scalar_col(k)];
    return state;
  }

  int rows_hjb_offset() const { return row_hjb_; }

 private:
  int u_off(int k) const { return k * lay_.n_u(); }
  int m_off(int k) const { return (prob_.spec_.n_time + 1) * lay_.n_u() + k * lay_.n_m(); }
  int v_off(int b) const {
    return (prob_.spec_.n_time + 1) * (lay_.n_u() + lay_.n_m()) + b * lay_.n_v();
  }
  int scalar_col(int k) const {
    return (prob_.spec_.n_time + 1) * (lay_.n_u() + lay_.n_m()) +
           lay_.num_v_blocks * lay_.n_v() + k;
  }
  int v_block_for_interval(int k) const { return prob_.spec_.shared_potential ? 0 : k; }

  Eigen::VectorXd to_physical(const Eigen::VectorXd& x) const {
    Eigen::VectorXd s = x;
    const int slices = prob_.spec_.n_time + 1;
    for (int k = 0; k < slices; ++k) {
      s.segment(u_off(k), lay_.n_u()) =
          prob_.gram_u(k).factor().matrix_l().triangularView<Eigen::Lower>() *
          x.segment(u_off(k), lay_.n_u());
      s.segment(m_off(k), lay_.n_m()) =
          prob_.gram_m(k).factor().matrix_l().triangularView<Eigen::Lower>() *
          x.segment(m_off(k), lay_.n_m());
    }
    for (int b = 0; b < lay_.num_v_blocks; ++b)
      s.segment(v_off(b), lay_.n_v()) =
          prob_.gram_v_->factor().matrix_l().triangularView<Eigen::Lower>() *
          x.segment(v_off(b), lay_.n_v());
    return s;
  }

  void add_u(Eigen::MatrixXd& jac, int row, int k, int local, double val) const {
    const Eigen::MatrixXd& l = prob_.gram_u(k).factor().matrix_l();
    jac.row(row).segment(u_off(k), local + 1) += val * l.row(local).head(local + 1);
  }
  void add_m(Eigen::MatrixXd& jac, int row, int k, int local, double val) const {
    const Eigen::MatrixXd& l = prob_.gram_m(k).factor().matrix_l();
    jac.row(row).segment(m_off(k), local + 1) += val * l.row(local).head(local + 1);
  }
  void add_v(Eigen::MatrixXd& jac, int row, int b, int local, double val) const {
    const Eigen::MatrixXd& l = prob_.gram_v_->factor().matrix_l();
    jac.row(row).segment(v_off(b), local + 1) += val * l.row(local).head(local + 1);
  }

  void build_linear_rows() const {
    const auto& spec = prob_.spec_;
    const int slices = spec.n_time + 1;
    linear_rows_.setZero(row_hjb_, n_vars_);
    int row = 0;
    for (int k = 0; k < slices; ++k)
      for (int j = 0; j < num_obs_m_; ++j, ++row) {
        const int idx = lay_.m_obs_index[j];
        const double scale = 1.0 / spec.m_obs_gamma[k];
        const Eigen::MatrixXd& l = prob_.gram_m(k).factor().matrix_l();
        linear_rows_.row(row).segment(m_off(k), idx + 1) =
            scale * l.row(idx).head(idx + 1);
      }
    for (int j = 0; j < num_obs_v_; ++j, ++row) {
      const int idx = lay_.v_obs_index[j];
      const double scale = 1.0 / spec.v_obs.noise_std[j];
      const Eigen::MatrixXd& l = prob_.gram_v_->factor().matrix_l();
      linear_rows_.row(row).segment(v_off(0), idx + 1) = scale * l.row(idx).head(idx + 1);
    }
    linear_rows_built_ = true;
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
    const int n_time = spec.n_time;
    const double dt = prob_.dt();

    int row = 0;
    for (int k = 0; k <= n_time; ++k)
      for (int j = 0; j < num_obs_m_; ++j, ++row)
        c[row] = (s[m_off(k) + lay_.m_obs_index[j]] - spec.m_obs_data(k, j)) /
                 spec.m_obs_gamma[k];
    for (int j = 0; j < num_obs_v_; ++j, ++row)
      c[row] = (s[v_off(0) + lay_.v_obs_index[j]] - spec.v_obs.data[j]) /
               spec.v_obs.noise_std[j];

    const double nu = effective(ScalarParam::Viscosity, s, spec.viscosity.nu,
                                !spec.viscosity.known);
    const bool nu_unknown = !spec.viscosity.known;
    const bool alpha_unknown =
        spec.coupling.kind == CouplingKind::PowerLocal && !spec.coupling.known;
    const bool sigma_unknown =
        spec.coupling.kind == CouplingKind::NonlocalGaussian && !spec.coupling.known;
    const double alpha = effective(ScalarParam::CouplingAlpha, s, spec.coupling.alpha,
                                   alpha_unknown);
    const double sigma = effective(ScalarParam::CouplingSigma, s, spec.coupling.sigma,
                                   sigma_unknown);

    int col_nu = -1, col_alpha = -1, col_sigma = -1;
    for (int k = 0; k < lay_.n_scalars(); ++k) {
      if (lay_.scalar_order[k] == ScalarParam::Viscosity) col_nu = scalar_col(k);
      if (lay_.scalar_order[k] == ScalarParam::CouplingAlpha) col_alpha = scalar_col(k);
      if (lay_.scalar_order[k] == ScalarParam::CouplingSigma) col_sigma = scalar_col(k);
    }

    // Non-local weight matrix (shared across intervals; sigma fixed per call).
    Eigen::MatrixXd w_nl;
    if (spec.coupling.kind == CouplingKind::NonlocalGaussian) {
      w_nl = (prob_.coupling_r2_ * (-0.5 / (sigma * sigma))).array().exp().matrix();
      for (Eigen::Index q = 0; q < spec.coupling.rule.weights.size(); ++q)
        w_nl.col(q) *= spec.coupling.rule.weights[q];
    }

    Eigen::VectorXd du(dim), dm(dim);
    for (int k = 0; k < n_time; ++k) {
      const int vb = prob_.forward_mode() ? -1 : v_block_for_interval(k);
      // Gamma(m_{k+1}) at every collocation point.
      Eigen::VectorXd gamma(m), gamma_quad;
      if (spec.coupling.kind == CouplingKind::PowerLocal) {
        for (int i = 0; i < m; ++i)
          gamma[i] = std::pow(s[m_off(k + 1) + lay_.m_value(i)], alpha);
      } else {
        gamma_quad.resize(static_cast<Eigen::Index>(lay_.quad_index.size()));
        for (std::size_t q = 0; q < lay_.quad_index.size(); ++q)
          gamma_quad[static_cast<Eigen::Index>(q)] =
              s[m_off(k + 1) + lay_.quad_index[q]];
        gamma = w_nl * gamma_quad;
      }

      for (int i = 0; i < m; ++i) {
        const double u_k = s[u_off(k) + lay_.u_value(i)];
        const double u_k1 = s[u_off(k + 1) + lay_.u_value(i)];
        const double lap_u = s[u_off(k) + lay_.u_laplacian(i)];
        const double m_k = s[m_off(k) + lay_.m_value(i)];
        const double m_k1 = s[m_off(k + 1) + lay_.m_value(i)];
        const double lap_m1 = s[m_off(k + 1) + lay_.m_laplacian(i)];
        for (int d = 0; d < dim; ++d) {
          du[d] = s[u_off(k) + lay_.u_partial(d, i)];
          dm[d] = s[m_off(k + 1) + lay_.m_partial(d, i)];
        }
        const double v_val =
            prob_.forward_mode() ? prob_.v_fixed_[i] : s[v_off(vb) + lay_.v_value(i)];

        const int rh = row_hjb_ + k * m + i;
        const int rf = row_fp_ + k * m + i;
        c[rh] = sqrt_apen * (-(u_k1 - u_k) / dt - nu * lap_u + 0.5 * du.squaredNorm() -
                              gamma[i] + v_val);
        c[rf] = sqrt_apen * ((m_k1 - m_k) / dt - nu * lap_m1 -
                              (lap_u * m_k1 + du.dot(dm)));

        if (jac == nullptr) continue;
        Eigen::MatrixXd& b = *jac;

        add_u(b, rh, k + 1, lay_.u_value(i), -sqrt_apen / dt);
        add_u(b, rh, k, lay_.u_value(i), sqrt_apen / dt);
        add_u(b, rh, k, lay_.u_laplacian(i), -sqrt_apen * nu);
        for (int d = 0; d < dim; ++d)
          add_u(b, rh, k, lay_.u_partial(d, i), sqrt_apen * du[d]);
        if (spec.coupling.kind == CouplingKind::PowerLocal) {
          add_m(b, rh, k + 1, lay_.m_value(i),
                -sqrt_apen * alpha * std::pow(m_k1, alpha - 1.0));
          if (alpha_unknown)
            b(rh, col_alpha) += -sqrt_apen * gamma[i] * std::log(m_k1) * alpha;
        } else {
          for (std::size_t q = 0; q < lay_.quad_index.size(); ++q)
            add_m(b, rh, k + 1, lay_.quad_index[q],
                  -sqrt_apen * w_nl(i, static_cast<Eigen::Index>(q)));
          if (sigma_unknown) {
            double dsig = 0.0;
            for (Eigen::Index q = 0; q < gamma_quad.size(); ++q)
              dsig += w_nl(i, q) * prob_.coupling_r2_(i, q) / (sigma * sigma) *
                      gamma_quad[q];
            b(rh, col_sigma) += -sqrt_apen * dsig;
          }
        }
        if (vb >= 0) add_v(b, rh, vb, lay_.v_value(i), sqrt_apen);
        if (nu_unknown) b(rh, col_nu) += -sqrt_apen * nu * lap_u;

        add_m(b, rf, k + 1, lay_.m_value(i), sqrt_apen * (1.0 / dt - lap_u));
        add_m(b, rf, k, lay_.m_value(i), -sqrt_apen / dt);
        add_m(b, rf, k + 1, lay_.m_laplacian(i), -sqrt_apen * nu);
        for (int d = 0; d < dim; ++d) {
          add_m(b, rf, k + 1, lay_.m_partial(d, i), -sqrt_apen * du[d]);
          add_u(b, rf, k, lay_.u_partial(d, i), -sqrt_apen * dm[d]);
        }
        add_u(b, rf, k, lay_.u_laplacian(i), -sqrt_apen * m_k1);
        if (nu_unknown) b(rf, col_nu) += -sqrt_apen * nu * lap_m1;
      }
    }

    // Terminal and initial condition rows.
    for (int i = 0; i < m; ++i) {
      const int rt = row_terminal_ + i;
      const int ri = row_initial_ + i;
      c[rt] = sqrt_apen * (s[u_off(n_time) + lay_.u_value(i)] - prob_.terminal_values_[i]);
      c[ri] = sqrt_apen * (s[m_off(0) + lay_.m_value(i)] - prob_.initial_values_[i]);
      if (jac != nullptr) {
        add_u(*jac, rt, n_time, lay_.u_value(i), sqrt_apen);
        add_m(*jac, ri, 0, lay_.m_value(i), sqrt_apen);
      }
    }
  }

  const TimeDependentProblem& prob_;
  const TimeDependentLayout& lay_;
  int n_vars_ = 0, rows_ = 0;
  int num_obs_m_ = 0, num_obs_v_ = 0;
  int row_hjb_ = 0, row_fp_ = 0, row_terminal_ = 0, row_initial_ = 0;
  double sqrt_apen_ = 0.0;
  Eigen::VectorXd prior_;
  mutable Eigen::MatrixXd linear_rows_;
  mutable bool linear_rows_built_ = false;
};

Eigen::VectorXd TimeDependentProblem::residuals(const TimeSlicedLatentState& state) const {
  TimeDependentModel model(*this);
  return model.scheme_rows_physical(model.pack(state));
}

double TimeDependentProblem::objective(const TimeSlicedLatentState& state) const {
  const int slices = spec_.n_time + 1;
  require(static_cast<int>(state.z.size()) == slices &&
              static_cast<int>(state.rho.size()) == slices,
          "time-sliced latent state layout mismatch");
  double obj = 0.0;
  for (int k = 0; k < slices; ++k) {
    obj += gram_u(k).quadratic_form(state.z[k]);
    obj += gram_m(k).quadratic_form(state.rho[k]);
  }
  for (const auto& vb : state.v) obj += gram_v_->quadratic_form(vb);
  for (int k = 0; k < slices; ++k)
    for (std::size_t j = 0; j < layout_.m_obs_index.size(); ++j) {
      const double r = (state.rho[k][layout_.m_obs_index[j]] -
                        spec_.m_obs_data(k, static_cast<Eigen::Index>(j))) /
                       spec_.m_obs_gamma[k];
      obj += r * r;
    }
  if (!forward_mode())
    for (std::size_t j = 0; j < layout_.v_obs_index.size(); ++j) {
      const double r = (state.v[0][layout_.v_obs_index[j]] - spec_.v_obs.data[j]) /
                       spec_.v_obs.noise_std[j];
      obj += r * r;
    }
  obj += spec_.alpha_pen * residuals(state).squaredNorm();
  return obj;
}

GaussNewtonDiagnostics TimeDependentProblem::solve(TimeSlicedLatentState& state,
                                                   const GaussNewtonConfig& config) const {
  TimeDependentModel model(*this);
  Eigen::VectorXd x = model.whiten(state);
  GaussNewtonDiagnostics diag = gauss_newton(model, x, config);
  state = model.unwhiten(x);
  return diag;
}

TimeSlicedFields TimeDependentProblem::reconstruct(const TimeSlicedLatentState& state) const {
  const int slices = spec_.n_time + 1;
  TimeSlicedFields out;
  out.u.reserve(slices);
  out.m.reserve(slices);
  for (int k = 0; k < slices; ++k) {
    auto gu = gram_u_.size() == 1 ? gram_u_[0] : gram_u_[k];
    auto gm = gram_m_.size() == 1 ? gram_m_[0] : gram_m_[k];
    out.u.push_back(RepresenterField{gu, gu->solve(state.z[k])});
    out.m.push_back(RepresenterField{gm, gm->solve(state.rho[k])});
  }
  if (forward_mode()) {
    out.v_known = spec_.known_potential;
  } else if (spec_.shared_potential) {
    out.v = RepresenterField{gram_v_, gram_v_->solve(state.v[0])};
  } else {
    for (const auto& vb : state.v)
      out.v_per_slice.push_back(RepresenterField{gram_v_, gram_v_->solve(vb)});
  }
  out.nu = effective_nu(state);
  if (spec_.coupling.kind == CouplingKind::PowerLocal)
    out.coupling_alpha = spec_.coupling.known
                             ? spec_.coupling.alpha
                             : std::exp(state.log_scalars.at(ScalarParam::CouplingAlpha));
  else
    out.coupling_sigma = spec_.coupling.known
                             ? spec_.coupling.sigma
                             : std::exp(state.log_scalars.at(ScalarParam::CouplingSigma));
  return out;
}

std::unique_ptr<NlsModel> TimeDependentProblem::make_model() const {
  return std::make_unique<TimeDependentModel>(*this);
}

Eigen::VectorXd TimeDependentProblem::whiten(const TimeSlicedLatentState& state) const {
  return TimeDependentModel(*this).whiten(state);
}

TimeSlicedLatentState TimeDependentProblem::unwhiten(const Eigen::VectorXd& x) const {
  return TimeDependentModel(*this).unwhiten(x);
}

}  // namespace mfggp
