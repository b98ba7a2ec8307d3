#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "core/fields.hpp"
#include "core/gauss_newton.hpp"
#include "core/stationary.hpp"

namespace mfggp {

/// Time-dependent inverse-problem instance over the forward-backward scheme
///
///   -(u_{k+1} - u_k)/dt - nu lap(u_k) + |Du_k|^2/2 - Gamma(m_{k+1}) + V = 0,
///    (m_{k+1} - m_k)/dt - nu lap(m_{k+1}) - (lap(u_k) m_{k+1} + Du_k . Dm_{k+1}) = 0,
///    u_{N_T} = terminal_cost,  m_0 = initial_density,
///
/// with one GP per field per time slice. Collocation points and observation
/// functionals are shared across slices. V is time-independent by default
/// (one latent block); the per-interval layout is kept behind shared_potential
/// = false. Terminal and initial conditions are penalized with alpha_pen like
/// the PDE rows. Time-dependent problems carry no mass or mean penalties.
struct TimeDependentProblemSpec {
  TorusDomain domain;
  Eigen::MatrixXd collocation;  // M x dim, shared across slices
  double horizon = 1.0;
  int n_time = 20;  // number of intervals; slices k = 0..n_time
  ViscositySpec viscosity;
  CouplingSpec coupling;
  std::function<double(const Eigen::VectorXd&)> terminal_cost;
  std::function<double(const Eigen::VectorXd&)> initial_density;

  std::vector<LinearFunctional> m_obs_functionals;  // fixed for all slices
  Eigen::MatrixXd m_obs_data;                       // (n_time + 1) x N_obs
  Eigen::VectorXd m_obs_gamma;                      // per slice
  VObservations v_obs;                              // for the shared potential

  std::vector<PeriodicKernel> kernels_u, kernels_m;  // size 1 (shared) or n_time + 1
  std::optional<PeriodicKernel> kernel_v;            // required unless forward mode
  double alpha_pen = 1e6;
  double nugget_eta = 1e-8;
  bool shared_potential = true;
  std::function<double(const Eigen::VectorXd&)> known_potential;  // forward mode
  unsigned threads = 0;
};

struct TimeSlicedLatentState {
  std::vector<Eigen::VectorXd> z;    // per slice 0..n_time
  std::vector<Eigen::VectorXd> rho;  // per slice 0..n_time
  std::vector<Eigen::VectorXd> v;    // size 1 (shared), n_time (per interval), 0 (forward)
  std::map<ScalarParam, double> log_scalars;
};

struct TimeDependentLayout {
  int dim = 0, num_points = 0, n_time = 0;
  std::vector<LinearFunctional> phi_u, phi_m, phi_v;
  std::vector<int> m_obs_index, v_obs_index, quad_index;
  std::vector<ScalarParam> scalar_order;
  int num_v_blocks = 0;

  int n_u() const { return static_cast<int>(phi_u.size()); }
  int n_m() const { return static_cast<int>(phi_m.size()); }
  int n_v() const { return static_cast<int>(phi_v.size()); }
  int n_scalars() const { return static_cast<int>(scalar_order.size()); }
  int u_value(int i) const { return i; }
  int u_partial(int d, int i) const { return num_points * (1 + d) + i; }
  int u_laplacian(int i) const { return num_points * (1 + dim) + i; }
  int m_value(int i) const { return i; }
  int m_partial(int d, int i) const { return num_points * (1 + d) + i; }
  int m_laplacian(int i) const { return num_points * (1 + dim) + i; }
  int v_value(int i) const { return i; }
};

/// Per-slice reconstructed fields.
struct TimeSlicedFields {
  std::vector<RepresenterField> u, m;          // slice 0..n_time
  std::optional<RepresenterField> v;           // shared potential
  std::vector<RepresenterField> v_per_slice;   // per-interval mode
  std::function<double(const Eigen::VectorXd&)> v_known;  // forward mode
  double nu = 0.0;
  std::optional<double> coupling_alpha, coupling_sigma;

  double v_value(const Eigen::VectorXd& x) const {
    if (v) return v->value(x);
    return v_known(x);
  }
};

class TimeDependentProblem {
 public:
  explicit TimeDependentProblem(TimeDependentProblemSpec spec);

  const TimeDependentProblemSpec& spec() const { return spec_; }
  const TimeDependentLayout& layout() const { return layout_; }
  double dt() const { return spec_.horizon / spec_.n_time; }
  bool forward_mode() const { return static_cast<bool>(spec_.known_potential); }

  TimeSlicedLatentState initial_state() const;

  /// Stacked scheme residuals: backward-HJB rows (interval-major), then
  /// forward-FP rows, then terminal rows, then initial rows.
  Eigen::VectorXd residuals(const TimeSlicedLatentState& state) const;

  double objective(const TimeSlicedLatentState& state) const;

  GaussNewtonDiagnostics solve(TimeSlicedLatentState& state,
                               const GaussNewtonConfig& config = {}) const;

  TimeSlicedFields reconstruct(const TimeSlicedLatentState& state) const;

  double effective_nu(const TimeSlicedLatentState& state) const;

  std::unique_ptr<NlsModel> make_model() const;
  Eigen::VectorXd whiten(const TimeSlicedLatentState& state) const;
  TimeSlicedLatentState unwhiten(const Eigen::VectorXd& x) const;

 private:
  friend class TimeDependentModel;

  const GramSystem& gram_u(int slice) const {
    return *gram_u_[gram_u_.size() == 1 ? 0 : slice];
  }
  const GramSystem& gram_m(int slice) const {
    return *gram_m_[gram_m_.size() == 1 ? 0 : slice];
  }

  TimeDependentProblemSpec spec_;
  TimeDependentLayout layout_;
  std::vector<std::shared_ptr<const GramSystem>> gram_u_, gram_m_;
  std::shared_ptr<const GramSystem> gram_v_;
  Eigen::VectorXd v_fixed_;      // forward mode: V*(x_i)
  Eigen::VectorXd terminal_values_, initial_values_;
  Eigen::MatrixXd coupling_r2_;  // non-local couplings
};

}  // namespace mfggp
