#include "core/reference.hpp"

#include <cmath>

#include "core/rng.hpp"

namespace mfggp {

Explicit1DSolution solve_1d_explicit(std::function<double(double)> potential, int grid_n) {
  require(static_cast<bool>(potential), "potential required");
  require(grid_n >= 2, "quadrature size must be at least 2");

  Box unit{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)};
  const QuadratureRule rule = gauss_legendre_rule(grid_n, unit);

  double v_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4096; ++i)
    v_min = std::min(v_min, potential(static_cast<double>(i) / 4096.0));

  // F(hbar) = int_0^1 sqrt(V - hbar) dx - 1, decreasing in hbar.
  auto mass_deficit = [&](double hbar) {
    double acc = 0.0;
    for (Eigen::Index q = 0; q < rule.weights.size(); ++q) {
      const double arg = potential(rule.nodes(q, 0)) - hbar;
      acc += rule.weights[q] * std::sqrt(std::max(arg, 0.0));
    }
    return acc - 1.0;
  };

  double lo = v_min - 4.0, hi = v_min - 1e-12;
  double f_lo = mass_deficit(lo), f_hi = mass_deficit(hi);
  if (!(f_lo > 0.0 && f_hi < 0.0))
    throw SolverError("1D explicit solve: no sign change in the bracket; "
                      "the potential is too small to carry unit mass");

  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = mass_deficit(mid);
    if (f_mid > 0.0)
      lo = mid;
    else
      hi = mid;
    if (std::abs(f_mid) <= 1e-13 && hi - lo <= 1e-14 * std::max(1.0, std::abs(mid))) break;
  }
  const double hbar = 0.5 * (lo + hi);

  Explicit1DSolution out;
  out.potential = std::move(potential);
  out.hbar = hbar;
  return out;
}

ForwardSolution solve_forward_stationary(const EnvironmentSpec& env,
                                         const TorusDomain& domain,
                                         const Eigen::MatrixXd& samples,
                                         const PeriodicKernel& kernel_u,
                                         const PeriodicKernel& kernel_m,
                                         const PenaltySpec& penalties, double eta,
                                         const GaussNewtonConfig& gn, unsigned threads) {
  require(static_cast<bool>(env.potential), "environment potential required");
  StationaryProblemSpec spec{.domain = domain,
                             .collocation = samples,
                             .viscosity = {env.nu, true},
                             .coupling = env.coupling,
                             .m_obs = {},
                             .v_obs = {},
                             .kernel_u = kernel_u,
                             .kernel_m = kernel_m,
                             .kernel_v = kernel_u,  // unused: V is fixed
                             .penalties = penalties,
                             .nugget_eta = eta,
                             .known_potential = env.potential,
                             .threads = threads};
  spec.coupling.known = true;

  StationaryProblem problem(std::move(spec));
  LatentState state = problem.initial_state();
  GaussNewtonDiagnostics diag = problem.solve(state, gn);
  if (!std::isfinite(problem.objective(state)))
    throw SolverError("forward solve diverged: " + diag.message);

  ForwardSolution out{problem.reconstruct(state), std::move(state), std::move(diag)};
  return out;
}

ObservationSet synthesize_observations(const FieldFn& field,
                                       std::vector<LinearFunctional> functionals,
                                       double gamma, std::uint64_t seed) {
  require(gamma >= 0, "noise level must be nonnegative");
  ObservationSet out;
  out.gamma = gamma;
  out.seed = seed;
  out.clean.resize(static_cast<Eigen::Index>(functionals.size()));
  for (std::size_t i = 0; i < functionals.size(); ++i)
    out.clean[static_cast<Eigen::Index>(i)] = functionals[i].apply(field);
  Rng rng(seed);
  out.noisy = out.clean + gamma * rng.normal_vector(out.clean.size());
  out.functionals = std::move(functionals);
  return out;
}

}  // namespace mfggp
