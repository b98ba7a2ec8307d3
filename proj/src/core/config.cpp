#include "core/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "core/common.hpp"

namespace mfggp {

namespace {

using nlohmann::json;

// Wraps json access so schema problems surface as InputError naming the field.
template <typename T>
T get_or(const json& j, const std::string& key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError("config field '" + key + "': " + e.what());
  }
}

const json& sub(const json& j, const std::string& key) {
  static const json empty = json::object();
  return j.contains(key) ? j.at(key) : empty;
}

PotentialConfig parse_potential(const json& j, double default_constant) {
  PotentialConfig p;
  p.constant = get_or(j, "constant", default_constant);
  if (j.contains("terms")) {
    for (const auto& t : j.at("terms")) {
      PotentialTermConfig term;
      term.coef = get_or(t, "c", 1.0);
      term.fn = get_or<std::string>(t, "fn", "sin");
      term.freq = get_or(t, "k", 1);
      term.axis = get_or(t, "axis", 0);
      require(term.fn == "sin" || term.fn == "cos",
              "potential term fn must be 'sin' or 'cos'");
      p.terms.push_back(term);
    }
  }
  return p;
}

CouplingConfig parse_coupling(const json& j, const CouplingConfig& fallback) {
  CouplingConfig c = fallback;
  c.type = get_or<std::string>(j, "type", fallback.type);
  c.alpha = get_or(j, "alpha", fallback.alpha);
  c.sigma = get_or(j, "sigma", fallback.sigma);
  c.quadrature_per_dim = get_or(j, "quadrature_per_dim", fallback.quadrature_per_dim);
  c.periodic_distance = get_or(j, "periodic_distance", fallback.periodic_distance);
  require(c.type == "power" || c.type == "nonlocal",
          "coupling type must be 'power' or 'nonlocal'");
  return c;
}

KernelConfig parse_kernel(const json& j, const KernelConfig& fallback) {
  KernelConfig k = fallback;
  if (j.contains("lengthscale")) k.lengthscales = {j.at("lengthscale").get<double>()};
  if (j.contains("lengthscales"))
    k.lengthscales = j.at("lengthscales").get<std::vector<double>>();
  for (double l : k.lengthscales) require(l > 0, "kernel lengthscales must be positive");
  return k;
}

GaussNewtonConfig parse_gn(const json& j, const GaussNewtonConfig& fallback) {
  GaussNewtonConfig g = fallback;
  g.max_iters = get_or(j, "max_iters", fallback.max_iters);
  g.rel_tol = get_or(j, "rel_tol", fallback.rel_tol);
  g.armijo_c1 = get_or(j, "armijo_c1", fallback.armijo_c1);
  g.backtrack = get_or(j, "backtrack", fallback.backtrack);
  g.max_backtracks = get_or(j, "max_backtracks", fallback.max_backtracks);
  require(g.max_iters >= 1, "gn.max_iters must be positive");
  require(g.rel_tol >= 0, "gn.rel_tol must be nonnegative");
  return g;
}

PenaltyConfig parse_penalties(const json& j, const PenaltyConfig& fallback) {
  PenaltyConfig p = fallback;
  p.beta = get_or(j, "beta", fallback.beta);
  p.alpha_pen = get_or(j, "alpha_pen", fallback.alpha_pen);
  p.hbar_prior_weight = get_or(j, "hbar_prior_weight", fallback.hbar_prior_weight);
  require(p.alpha_pen > 0, "penalties.alpha_pen must be positive");
  require(p.beta >= 0, "penalties.beta must be nonnegative");
  return p;
}

}  // namespace

std::function<double(const Eigen::VectorXd&)> PotentialConfig::make(int dim) const {
  for (const auto& t : terms)
    require(t.axis >= 0 && t.axis < dim, "potential term axis out of range");
  const double c0 = constant;
  const auto terms_copy = terms;
  return [c0, terms_copy](const Eigen::VectorXd& x) {
    double v = c0;
    for (const auto& t : terms_copy) {
      const double arg = 2.0 * M_PI * t.freq * x[t.axis];
      v += t.coef * (t.fn == "sin" ? std::sin(arg) : std::cos(arg));
    }
    return v;
  };
}

TorusDomain DomainConfig::make() const {
  require(dim >= 1, "domain.dim must be positive");
  require(static_cast<int>(lo.size()) == dim && static_cast<int>(hi.size()) == dim,
          "domain box must list one [lo, hi] pair per axis");
  TorusDomain d;
  d.dim = dim;
  d.lo = Eigen::Map<const Eigen::VectorXd>(lo.data(), dim);
  d.hi = Eigen::Map<const Eigen::VectorXd>(hi.data(), dim);
  require(((d.hi - d.lo).array() > 0).all(), "domain box must have positive extent");
  return d;
}

CouplingSpec CouplingConfig::make(const TorusDomain& domain) const {
  CouplingSpec c;
  if (type == "power") {
    c.kind = CouplingKind::PowerLocal;
    c.alpha = alpha;
  } else {
    c.kind = CouplingKind::NonlocalGaussian;
    c.sigma = sigma;
    c.periodic_distance = periodic_distance;
    require(quadrature_per_dim >= 1,
            "nonlocal coupling requires quadrature_per_dim >= 1");
    c.rule = gauss_legendre_rule(quadrature_per_dim, domain.box());
  }
  c.known = true;
  return c;
}

PeriodicKernel KernelConfig::make(const TorusDomain& domain) const {
  require(!lengthscales.empty(), "kernel lengthscales missing");
  Eigen::VectorXd l(domain.dim);
  if (lengthscales.size() == 1) {
    l.setConstant(lengthscales[0]);
  } else {
    require(static_cast<int>(lengthscales.size()) == domain.dim,
            "kernel lengthscales must be shared or one per axis");
    l = Eigen::Map<const Eigen::VectorXd>(lengthscales.data(), domain.dim);
  }
  return PeriodicKernel(domain.dim, l, domain.periods());
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("config is not valid JSON: " + std::string(e.what()));
  }
  return from_json(j);
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.echo = j;
  cfg.version = get_or(j, "version", 1);
  require(cfg.version == 1, "unsupported config schema version");
  cfg.mode = get_or<std::string>(j, "mode", "");
  static const std::set<std::string> kModes{"forward", "invert", "tdinvert", "study"};
  require(kModes.count(cfg.mode) == 1,
          "mode must be one of forward | invert | tdinvert | study");
  if (j.contains("seeds"))
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  else
    cfg.seeds = {get_or<std::uint64_t>(j, "seed", 0)};
  require(!cfg.seeds.empty(), "at least one seed required");
  cfg.threads = get_or<unsigned>(j, "threads", 0);
  cfg.output_dir = get_or<std::string>(j, "output_dir", "out");
  cfg.data_source = get_or<std::string>(j, "data_source", "forward");
  require(cfg.data_source == "forward" || cfg.data_source == "explicit1d",
          "data_source must be 'forward' or 'explicit1d'");

  const json& jd = sub(j, "domain");
  cfg.domain.dim = get_or(jd, "dim", 2);
  if (jd.contains("box")) {
    for (const auto& pair : jd.at("box")) {
      require(pair.is_array() && pair.size() == 2, "domain.box entries must be [lo, hi]");
      cfg.domain.lo.push_back(pair[0].get<double>());
      cfg.domain.hi.push_back(pair[1].get<double>());
    }
  } else {
    cfg.domain.lo.assign(cfg.domain.dim, 0.0);
    cfg.domain.hi.assign(cfg.domain.dim, 1.0);
  }

  const json& je = sub(j, "environment");
  cfg.potential = parse_potential(sub(je, "potential"), 0.0);
  cfg.viscosity = get_or(je, "viscosity", 1.0);
  cfg.coupling = parse_coupling(sub(je, "coupling"), CouplingConfig{});

  const json& jf = sub(j, "forward");
  cfg.forward.num_collocation = get_or(jf, "num_collocation", 400);
  require(cfg.forward.num_collocation >= 1, "forward.num_collocation must be positive");
  cfg.forward.kernel_u = parse_kernel(sub(jf, "kernel_u"), KernelConfig{});
  cfg.forward.kernel_m = parse_kernel(sub(jf, "kernel_m"), cfg.forward.kernel_u);
  cfg.forward.gn = parse_gn(sub(jf, "gn"), GaussNewtonConfig{});

  const json& ji = sub(j, "inverse");
  cfg.inverse.num_collocation = get_or(ji, "num_collocation", 400);
  cfg.inverse.num_m_observations = get_or(ji, "num_m_observations", 40);
  cfg.inverse.num_v_observations = get_or(ji, "num_v_observations", 0);
  cfg.inverse.noise_std = get_or(ji, "noise_std", 1e-3);
  cfg.inverse.unknown_viscosity = get_or(ji, "unknown_viscosity", false);
  cfg.inverse.unknown_alpha = get_or(ji, "unknown_alpha", false);
  cfg.inverse.unknown_sigma = get_or(ji, "unknown_sigma", false);
  if (ji.contains("coupling"))
    cfg.inverse.coupling = parse_coupling(ji.at("coupling"), cfg.coupling);
  KernelConfig default_kernel;
  cfg.inverse.kernel_u = parse_kernel(sub(ji, "kernel_u"), default_kernel);
  cfg.inverse.kernel_m = parse_kernel(sub(ji, "kernel_m"), cfg.inverse.kernel_u);
  cfg.inverse.kernel_v = parse_kernel(sub(ji, "kernel_v"), cfg.inverse.kernel_u);
  cfg.inverse.penalties = parse_penalties(sub(ji, "penalties"), PenaltyConfig{});
  cfg.inverse.nugget = get_or(ji, "nugget", 1e-8);
  cfg.inverse.gn = parse_gn(sub(ji, "gn"), GaussNewtonConfig{});
  require(cfg.inverse.num_collocation >= 1, "inverse.num_collocation must be positive");
  require(cfg.inverse.num_m_observations >= 0, "inverse.num_m_observations negative");
  require(cfg.inverse.num_v_observations >= 0, "inverse.num_v_observations negative");
  require(cfg.inverse.num_m_observations <= cfg.inverse.num_collocation,
          "inverse.num_m_observations must not exceed num_collocation");
  require(cfg.inverse.num_v_observations <= cfg.inverse.num_collocation,
          "inverse.num_v_observations must not exceed num_collocation");
  require(cfg.inverse.noise_std > 0, "inverse.noise_std must be positive");
  require(cfg.inverse.nugget >= 0, "inverse.nugget must be nonnegative");

  const json& js = sub(j, "study");
  if (js.contains("observation_counts"))
    cfg.study.observation_counts = js.at("observation_counts").get<std::vector<int>>();
  cfg.study.num_seeds = get_or(js, "num_seeds", 10);
  require(cfg.study.num_seeds >= 1, "study.num_seeds must be positive");
  for (int c : cfg.study.observation_counts) {
    require(c >= 1, "study observation counts must be positive");
    require(c <= cfg.inverse.num_collocation,
            "study observation counts must not exceed inverse.num_collocation");
  }

  const json& jt = sub(j, "timedep");
  cfg.timedep.horizon = get_or(jt, "horizon", 1.0);
  cfg.timedep.num_intervals = get_or(jt, "num_intervals", 20);
  cfg.timedep.num_collocation = get_or(jt, "num_collocation", 50);
  cfg.timedep.num_m_observations = get_or(jt, "num_m_observations", 5);
  cfg.timedep.num_v_observations = get_or(jt, "num_v_observations", 3);
  cfg.timedep.terminal_cost = parse_potential(sub(jt, "terminal_cost"), 0.0);
  cfg.timedep.initial_density = parse_potential(sub(jt, "initial_density"), 1.0);
  cfg.timedep.kernel_u = parse_kernel(sub(jt, "kernel_u"), default_kernel);
  cfg.timedep.kernel_m = parse_kernel(sub(jt, "kernel_m"), cfg.timedep.kernel_u);
  cfg.timedep.kernel_v = parse_kernel(sub(jt, "kernel_v"), cfg.timedep.kernel_u);
  cfg.timedep.alpha_pen = get_or(jt, "alpha_pen", 1e6);
  cfg.timedep.nugget = get_or(jt, "nugget", 1e-8);
  cfg.timedep.gn = parse_gn(sub(jt, "gn"), GaussNewtonConfig{});
  require(cfg.timedep.horizon > 0, "timedep.horizon must be positive");
  require(cfg.timedep.num_intervals >= 1, "timedep.num_intervals must be positive");
  require(cfg.timedep.num_collocation >= 1, "timedep.num_collocation must be positive");
  require(cfg.timedep.num_m_observations >= 0 &&
              cfg.timedep.num_m_observations <= cfg.timedep.num_collocation,
          "timedep.num_m_observations out of range");
  require(cfg.timedep.num_v_observations >= 0 &&
              cfg.timedep.num_v_observations <= cfg.timedep.num_collocation,
          "timedep.num_v_observations out of range");
  require(cfg.timedep.alpha_pen > 0, "timedep.alpha_pen must be positive");

  cfg.metrics_grid = get_or(j, "metrics_grid", 0);
  require(cfg.metrics_grid >= 0, "metrics_grid must be nonnegative");

  if (cfg.mode == "invert" || cfg.mode == "study")
    if (cfg.data_source == "explicit1d")
      require(cfg.domain.dim == 1, "explicit1d data source requires a 1D domain");

  return cfg;
}

}  // namespace mfggp
