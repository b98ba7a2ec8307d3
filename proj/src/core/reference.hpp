#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>

#include "core/stationary.hpp"

namespace mfggp {

/// Known environment used to manufacture reference solutions and data.
struct EnvironmentSpec {
  std::function<double(const Eigen::VectorXd&)> potential;  // V*
  double nu = 0.1;
  CouplingSpec coupling;  // parameters known
  // Time-dependent extras.
  std::function<double(const Eigen::VectorXd&)> terminal_cost;
  std::function<double(const Eigen::VectorXd&)> initial_density;
  double horizon = 1.0;
  int n_time = 20;
};

/// Explicit solution of the inviscid 1D system on [0, 1): u* = 0,
/// m* = sqrt(V* - hbar*) with hbar* the root of int sqrt(V - hbar) dx = 1.
struct Explicit1DSolution {
  std::function<double(double)> potential;
  double hbar = 0.0;

  double u(double) const { return 0.0; }
  double m(double x) const { return std::sqrt(potential(x) - hbar); }
};

/// Bisection on [min V - 4, min V - 1e-12] with a grid_n-point Gauss-Legendre
/// integral; |F(hbar*)| <= 1e-12 at the returned root. Throws when V is too
/// small to carry unit mass (no sign change in the bracket).
Explicit1DSolution solve_1d_explicit(std::function<double(double)> potential,
                                     int grid_n = 512);

struct ForwardSolution {
  RecoveredFields fields;
  LatentState state;
  GaussNewtonDiagnostics diagnostics;
};

/// Stationary forward solve: the inverse machinery with V, nu, and the
/// coupling fixed to the environment (no observation or V-prior terms;
/// mean/mass penalties active).
ForwardSolution solve_forward_stationary(const EnvironmentSpec& env,
                                         const TorusDomain& domain,
                                         const Eigen::MatrixXd& samples,
                                         const PeriodicKernel& kernel_u,
                                         const PeriodicKernel& kernel_m,
                                         const PenaltySpec& penalties, double eta,
                                         const GaussNewtonConfig& gn = {},
                                         unsigned threads = 0);

/// Noisy observations of a field through a set of functionals.
struct ObservationSet {
  std::vector<LinearFunctional> functionals;
  Eigen::VectorXd clean;
  Eigen::VectorXd noisy;
  double gamma = 0.0;
  std::uint64_t seed = 0;
};

/// clean = functionals applied to the field; noisy = clean + iid N(0, gamma^2)
/// draws from a generator seeded with `seed`. Identical (seed, functionals)
/// give identical output.
ObservationSet synthesize_observations(const FieldFn& field,
                                       std::vector<LinearFunctional> functionals,
                                       double gamma, std::uint64_t seed);

}  // namespace mfggp
