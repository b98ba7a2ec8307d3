#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "core/fields.hpp"
#include "core/functionals.hpp"
#include "core/gauss_newton.hpp"
#include "core/gram.hpp"

namespace mfggp {

/// Torus described by its identification box; periods are hi - lo. Every
/// collocation point is interior (no boundary feature block is instantiated).
struct TorusDomain {
  int dim = 1;
  Eigen::VectorXd lo, hi;

  static TorusDomain unit(int dim, double lo_val = 0.0, double hi_val = 1.0);
  Eigen::VectorXd periods() const { return hi - lo; }
  Box box() const { return Box{lo, hi}; }
};

enum class CouplingKind { PowerLocal, NonlocalGaussian };

struct CouplingSpec {
  CouplingKind kind = CouplingKind::PowerLocal;
  double alpha = 2.0;   // PowerLocal: Gamma(m) = m^alpha
  double sigma = 0.5;   // NonlocalGaussian: Gaussian convolution lengthscale
  bool known = true;    // false: the scalar joins the latent vector (log-parameterized)
  QuadratureRule rule;  // NonlocalGaussian only
  bool periodic_distance = false;
};

struct ViscositySpec {
  double nu = 1.0;
  bool known = true;
};

struct MObservations {
  std::vector<LinearFunctional> functionals;
  Eigen::VectorXd data;
  double gamma = 1e-3;  // noise standard deviation
};

struct VObservations {
  std::vector<LinearFunctional> functionals;
  Eigen::VectorXd data;
  Eigen::VectorXd noise_std;  // per observation
  bool empty() const { return functionals.empty(); }
};

struct PenaltySpec {
  double beta = 1e4;       // weight of the mean-of-u and mass-of-m penalties
  double alpha_pen = 1e6;  // weight of the PDE residual penalty
  double hbar_prior_weight = 1.0;
};

/// Full stationary inverse-problem instance. When known_potential is set the
/// potential leaves the latent vector: V values at collocation points are
/// fixed constants and no V prior or observation terms are formed (the
/// forward-solver specialization).
struct StationaryProblemSpec {
  TorusDomain domain;
  Eigen::MatrixXd collocation;  // M x dim
  ViscositySpec viscosity;
  CouplingSpec coupling;
  MObservations m_obs;
  VObservations v_obs;
  PeriodicKernel kernel_u, kernel_m, kernel_v;
  PenaltySpec penalties;
  double nugget_eta = 1e-8;
  std::function<double(const Eigen::VectorXd&)> known_potential;
  unsigned threads = 0;
};

enum class ScalarParam { Viscosity, CouplingAlpha, CouplingSigma };

/// Finite-dimensional unknowns: latent feature values for each field, the
/// effective Hamiltonian constant, and log-parameterized unknown scalars.
struct LatentState {
  Eigen::VectorXd z;    // u features
  Eigen::VectorXd rho;  // m features
  Eigen::VectorXd v;    // V features (empty in forward mode)
  double hbar = 0.0;
  std::map<ScalarParam, double> log_scalars;
};

/// Deterministic layout of the feature sets and the latent vector.
///
/// u features: [value x M][partial_0 x M]...[partial_{d-1} x M][laplacian x M].
/// m features: the same stencil, then extra features for observation
/// functionals and non-local quadrature nodes that do not coincide with a
/// collocation point (first occurrence wins, duplicates resolve to the same
/// index). V features: [value x M] then extra observation features.
struct StationaryLayout {
  int dim = 0;
  int num_points = 0;

  std::vector<LinearFunctional> phi_u, phi_m, phi_v;
  std::vector<int> m_obs_index;  // m-observation functional -> index into phi_m
  std::vector<int> v_obs_index;  // V-observation functional -> index into phi_v
  std::vector<int> quad_index;   // quadrature node -> index into phi_m (value feature)
  std::vector<ScalarParam> scalar_order;

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

  // Offsets into the concatenated latent vector [z | rho | v | hbar | scalars].
  int z_offset() const { return 0; }
  int rho_offset() const { return n_u(); }
  int v_offset() const { return n_u() + n_m(); }
  int hbar_offset() const { return n_u() + n_m() + n_v(); }
  int scalar_offset(int k) const { return hbar_offset() + 1 + k; }
  int total_size() const { return hbar_offset() + 1 + n_scalars(); }
};

StationaryLayout build_layout(const StationaryProblemSpec& spec);

/// The spec's feature-set builder: (phi_u, phi_m, phi_V) in canonical order.
std::array<std::vector<LinearFunctional>, 3> build_feature_sets(
    const StationaryProblemSpec& spec);

struct SolveResult {
  LatentState state;
  GaussNewtonDiagnostics diagnostics;
};

/// Assembled problem: layout plus factorized Gram systems. Immutable after
/// construction; solves and evaluations are safe to run concurrently.
class StationaryProblem {
 public:
  explicit StationaryProblem(StationaryProblemSpec spec);

  const StationaryProblemSpec& spec() const { return spec_; }
  const StationaryLayout& layout() const { return layout_; }
  const GramSystem& gram_u() const { return *gram_u_; }
  const GramSystem& gram_m() const { return *gram_m_; }
  const GramSystem& gram_v() const;
  bool forward_mode() const { return static_cast<bool>(spec_.known_potential); }

  LatentState initial_state() const;

  /// Stacked PDE residuals: M backward-HJB rows then M Fokker-Planck rows.
  Eigen::VectorXd pde_residuals(const LatentState& state) const;

  /// Relaxed objective: prior quadratic forms + |hbar|^2 prior + data misfits
  /// + mean/mass penalties + alpha_pen |pde_residuals|^2.
  double objective(const LatentState& state) const;

  GaussNewtonDiagnostics solve(LatentState& state, const GaussNewtonConfig& config = {}) const;

  RecoveredFields reconstruct(const LatentState& state) const;

  /// Effective scalar values (from the spec, or exp of the latent).
  double effective_nu(const LatentState& state) const;
  double effective_alpha(const LatentState& state) const;
  double effective_sigma(const LatentState& state) const;

  /// Internal least-squares model over whitened coordinates; exposed for
  /// gradient checks in tests.
  std::unique_ptr<NlsModel> make_model() const;
  Eigen::VectorXd whiten(const LatentState& state) const;
  LatentState unwhiten(const Eigen::VectorXd& x) const;

 private:
  friend class StationaryModel;

  StationaryProblemSpec spec_;
  StationaryLayout layout_;
  std::shared_ptr<const GramSystem> gram_u_, gram_m_, gram_v_;
  Eigen::VectorXd v_fixed_;        // forward mode: V*(x_i) at collocation points
  Eigen::MatrixXd coupling_r2_;    // non-local: squared distances collocation x nodes
};

}  // namespace mfggp
