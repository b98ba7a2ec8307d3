#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/gauss_newton.hpp"
#include "core/stationary.hpp"

namespace mfggp {

/// Trigonometric-polynomial potential: constant + sum of c * fn(2 pi k x_axis)
/// with fn in {sin, cos}. Covers every environment the experiments use.
struct PotentialTermConfig {
  double coef = 1.0;
  std::string fn = "sin";
  int freq = 1;
  int axis = 0;
};

struct PotentialConfig {
  double constant = 0.0;
  std::vector<PotentialTermConfig> terms;

  std::function<double(const Eigen::VectorXd&)> make(int dim) const;
};

struct DomainConfig {
  int dim = 2;
  std::vector<double> lo, hi;  // identification box per axis

  TorusDomain make() const;
};

struct CouplingConfig {
  std::string type = "power";  // power | nonlocal
  double alpha = 2.0;
  double sigma = 0.5;
  int quadrature_per_dim = 0;  // nonlocal only
  bool periodic_distance = false;

  CouplingSpec make(const TorusDomain& domain) const;
};

struct KernelConfig {
  std::vector<double> lengthscales{1.0};  // one shared value or one per axis

  PeriodicKernel make(const TorusDomain& domain) const;
};

struct PenaltyConfig {
  double beta = 1e4;
  double alpha_pen = 1e6;
  double hbar_prior_weight = 1.0;

  PenaltySpec make() const { return PenaltySpec{beta, alpha_pen, hbar_prior_weight}; }
};

struct ForwardConfig {
  int num_collocation = 400;
  KernelConfig kernel_u, kernel_m;
  GaussNewtonConfig gn;
};

struct InverseConfig {
  int num_collocation = 400;
  int num_m_observations = 40;
  int num_v_observations = 0;
  double noise_std = 1e-3;
  bool unknown_viscosity = false;
  bool unknown_alpha = false;
  bool unknown_sigma = false;
  std::optional<CouplingConfig> coupling;  // model override (misspecified recovery)
  KernelConfig kernel_u, kernel_m, kernel_v;
  PenaltyConfig penalties;
  double nugget = 1e-8;
  GaussNewtonConfig gn;
};

struct StudyConfig {
  std::vector<int> observation_counts{10, 20, 40};
  int num_seeds = 10;
};

struct TimedepConfig {
  double horizon = 1.0;
  int num_intervals = 20;
  int num_collocation = 50;
  int num_m_observations = 5;
  int num_v_observations = 3;
  PotentialConfig terminal_cost;   // defaults to 0
  PotentialConfig initial_density; // defaults to 1
  KernelConfig kernel_u, kernel_m, kernel_v;
  double alpha_pen = 1e6;
  double nugget = 1e-8;
  GaussNewtonConfig gn;
};

/// Parsed and validated experiment description (schema version 1).
struct ExperimentConfig {
  int version = 1;
  std::string mode;  // forward | invert | tdinvert | study
  std::vector<std::uint64_t> seeds{0};
  unsigned threads = 0;
  std::string output_dir = "out";
  std::string data_source = "forward";  // forward | explicit1d

  DomainConfig domain;
  PotentialConfig potential;  // environment V*
  double viscosity = 1.0;
  CouplingConfig coupling;    // environment coupling

  ForwardConfig forward;
  InverseConfig inverse;
  StudyConfig study;
  TimedepConfig timedep;
  int metrics_grid = 0;  // 0: 64 per axis in 2D, 128 in 1D

  nlohmann::json echo;  // the raw document, replayed into the result record

  std::uint64_t seed() const { return seeds.front(); }

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::string& path);
};

}  // namespace mfggp
