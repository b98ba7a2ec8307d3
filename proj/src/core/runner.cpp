#include "core/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "core/grid.hpp"
#include "core/reference.hpp"
#include "core/rng.hpp"
#include "core/timedep.hpp"

namespace mfggp {

namespace {

using nlohmann::json;

// Sub-seeds are derived from the config seed with fixed salts so that every
// random draw in the pipeline is reproducible from the record alone.
enum class SeedSalt : std::uint64_t {
  ForwardSampling = 1,
  InverseSampling = 2,
  MNoise = 3,
  VNoise = 4,
};

std::uint64_t derive_seed(std::uint64_t base, SeedSalt salt) {
  return base * 1000003ULL + static_cast<std::uint64_t>(salt);
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

std::vector<int> metrics_shape(const ExperimentConfig& cfg) {
  const int n = cfg.metrics_grid > 0 ? cfg.metrics_grid : (cfg.domain.dim == 1 ? 128 : 64);
  return std::vector<int>(cfg.domain.dim, n);
}

json diagnostics_json(const GaussNewtonDiagnostics& d) {
  return json{{"iterations", d.iterations},
              {"converged", d.converged},
              {"message", d.message},
              {"initial_objective", d.objective_trace.front()},
              {"final_objective", d.objective_trace.back()}};
}

FieldFn constant_field(double value) {
  return [value](const Eigen::VectorXd&, const DerivOp& op) {
    return op.kind == DerivOp::Kind::Identity ? value : 0.0;
  };
}

// Reference solution interface shared by the forward-GP and explicit-1D paths.
struct ReferenceSolution {
  FieldFn u, m;
  std::function<double(const Eigen::VectorXd&)> potential;
  double hbar = 0.0;
  json diagnostics;
};

ReferenceSolution make_reference(const ExperimentConfig& cfg, const TorusDomain& domain) {
  ReferenceSolution ref;
  const auto potential = cfg.potential.make(domain.dim);
  ref.potential = potential;

  if (cfg.data_source == "explicit1d") {
    Explicit1DSolution sol = solve_1d_explicit(
        [potential](double x) { return potential(Eigen::VectorXd::Constant(1, x)); });
    ref.hbar = sol.hbar;
    ref.u = constant_field(0.0);
    const double hbar = sol.hbar;
    ref.m = [potential, hbar](const Eigen::VectorXd& x, const DerivOp& op) {
      require(op.kind == DerivOp::Kind::Identity,
              "explicit 1D reference provides values only");
      return std::sqrt(potential(x) - hbar);
    };
    ref.diagnostics = json{{"source", "explicit1d"}, {"hbar", sol.hbar}};
    return ref;
  }

  EnvironmentSpec env;
  env.potential = potential;
  env.nu = cfg.viscosity;
  env.coupling = cfg.coupling.make(domain);

  Rng rng(derive_seed(cfg.seed(), SeedSalt::ForwardSampling));
  Eigen::MatrixXd samples;
  if (env.coupling.kind == CouplingKind::NonlocalGaussian) {
    // Quadrature nodes double as collocation points; extra random samples on top.
    const Eigen::MatrixXd extra =
        rng.uniform_points(cfg.forward.num_collocation, domain.lo, domain.hi);
    samples.resize(env.coupling.rule.nodes.rows() + extra.rows(), domain.dim);
    samples << env.coupling.rule.nodes, extra;
  } else {
    samples = rng.uniform_points(cfg.forward.num_collocation, domain.lo, domain.hi);
  }

  PenaltySpec penalties;  // defaults; the forward solve has no observation terms
  ForwardSolution fwd = solve_forward_stationary(
      env, domain, samples, cfg.forward.kernel_u.make(domain),
      cfg.forward.kernel_m.make(domain), penalties, cfg.inverse.nugget, cfg.forward.gn,
      cfg.threads);
  ref.hbar = fwd.fields.hbar;
  ref.u = fwd.fields.u.as_field_fn();
  ref.m = fwd.fields.m.as_field_fn();
  ref.diagnostics = diagnostics_json(fwd.diagnostics);
  ref.diagnostics["source"] = "forward";
  ref.diagnostics["hbar"] = fwd.fields.hbar;
  return ref;
}

struct InverseRun {
  LatentState state;
  RecoveredFields fields;
  GaussNewtonDiagnostics diagnostics;
  double pde_residual_norm = 0.0;
};

// One stationary inversion against a reference solution. Collocation points
// are sampled uniformly with the given seed; the first I points carry the m
// observations and the first I_V the V observations (the nonlocal layout
// appends the quadrature nodes after the random samples).
InverseRun run_inverse_once(const ExperimentConfig& cfg, const TorusDomain& domain,
                            const ReferenceSolution& ref, std::uint64_t seed,
                            int num_m_obs) {
  const auto& inv = cfg.inverse;
  CouplingConfig coupling_cfg = inv.coupling.value_or(cfg.coupling);
  CouplingSpec coupling = coupling_cfg.make(domain);
  coupling.known = !(inv.unknown_alpha || inv.unknown_sigma);

  Rng rng(derive_seed(seed, SeedSalt::InverseSampling));
  Eigen::MatrixXd samples;
  if (coupling.kind == CouplingKind::NonlocalGaussian) {
    const int extra = std::max(num_m_obs, std::max(inv.num_v_observations, 1));
    const Eigen::MatrixXd obs_pts = rng.uniform_points(extra, domain.lo, domain.hi);
    samples.resize(obs_pts.rows() + coupling.rule.nodes.rows(), domain.dim);
    samples << obs_pts, coupling.rule.nodes;
  } else {
    samples = rng.uniform_points(inv.num_collocation, domain.lo, domain.hi);
  }

  std::vector<LinearFunctional> m_funcs;
  for (int i = 0; i < num_m_obs; ++i)
    m_funcs.push_back(LinearFunctional::point_eval(samples.row(i)));
  ObservationSet m_obs = synthesize_observations(ref.m, std::move(m_funcs), inv.noise_std,
                                                 derive_seed(seed, SeedSalt::MNoise));

  VObservations v_obs;
  if (inv.num_v_observations > 0) {
    std::vector<LinearFunctional> v_funcs;
    for (int i = 0; i < inv.num_v_observations; ++i)
      v_funcs.push_back(LinearFunctional::point_eval(samples.row(i)));
    auto v_field = [&ref](const Eigen::VectorXd& x, const DerivOp&) {
      return ref.potential(x);
    };
    ObservationSet vo = synthesize_observations(FieldFn(v_field), std::move(v_funcs),
                                                inv.noise_std,
                                                derive_seed(seed, SeedSalt::VNoise));
    v_obs.functionals = std::move(vo.functionals);
    v_obs.data = std::move(vo.noisy);
    v_obs.noise_std = Eigen::VectorXd::Constant(inv.num_v_observations, inv.noise_std);
  }

  StationaryProblemSpec spec{
      .domain = domain,
      .collocation = std::move(samples),
      .viscosity = {cfg.viscosity, !inv.unknown_viscosity},
      .coupling = std::move(coupling),
      .m_obs = {std::move(m_obs.functionals), std::move(m_obs.noisy), inv.noise_std},
      .v_obs = std::move(v_obs),
      .kernel_u = inv.kernel_u.make(domain),
      .kernel_m = inv.kernel_m.make(domain),
      .kernel_v = inv.kernel_v.make(domain),
      .penalties = inv.penalties.make(),
      .nugget_eta = inv.nugget,
      .known_potential = {},
      .threads = cfg.threads};

  StationaryProblem problem(std::move(spec));
  InverseRun run;
  run.state = problem.initial_state();
  run.diagnostics = problem.solve(run.state, inv.gn);
  run.pde_residual_norm = problem.pde_residuals(run.state).norm();
  run.fields = problem.reconstruct(run.state);
  return run;
}

struct StationaryErrors {
  double m = 0, u = 0, v = 0, v_minus_hbar = 0;
};

StationaryErrors stationary_errors(const ExperimentConfig& cfg, const TorusDomain& domain,
                                   const ReferenceSolution& ref, const RecoveredFields& rec,
                                   std::vector<Grid>* grids_out = nullptr) {
  const auto shape = metrics_shape(cfg);
  const Box box = domain.box();
  Grid m_ref = eval_on_grid(ref.m, box, shape, cfg.threads);
  Grid u_ref = eval_on_grid(ref.u, box, shape, cfg.threads);
  Grid v_ref = eval_on_grid(
      [&ref](const Eigen::VectorXd& x, const DerivOp&) { return ref.potential(x); }, box,
      shape, cfg.threads);
  Grid m_rec = eval_on_grid(rec.m.as_field_fn(), box, shape, cfg.threads);
  Grid u_rec = eval_on_grid(rec.u.as_field_fn(), box, shape, cfg.threads);
  Grid v_rec = eval_on_grid(rec.v_fn(), box, shape, cfg.threads);

  Grid vmh_ref = v_ref;
  vmh_ref.values.array() -= ref.hbar;
  Grid vmh_rec = v_rec;
  vmh_rec.values.array() -= rec.hbar;

  StationaryErrors err;
  err.m = l2_grid_error(m_rec, m_ref);
  err.u = l2_grid_error(u_rec, u_ref);
  err.v = l2_grid_error(v_rec, v_ref);
  err.v_minus_hbar = l2_grid_error(vmh_rec, vmh_ref);
  if (grids_out)
    *grids_out = {m_rec, m_ref, u_rec, u_ref, v_rec, v_ref, vmh_rec, vmh_ref};
  return err;
}

const char* kStationaryGridNames[8] = {"m_recovered", "m_reference", "u_recovered",
                                       "u_reference", "v_recovered", "v_reference",
                                       "v_minus_hbar_recovered", "v_minus_hbar_reference"};

json scalars_json(const RecoveredFields& fields) {
  json out{{"hbar", fields.hbar}, {"nu", fields.nu}};
  if (fields.coupling_alpha) out["alpha"] = *fields.coupling_alpha;
  if (fields.coupling_sigma) out["sigma"] = *fields.coupling_sigma;
  return out;
}

json run_forward_mode(const ExperimentConfig& cfg, const TorusDomain& domain,
                      const std::string& out_dir) {
  ReferenceSolution ref = make_reference(cfg, domain);
  const auto shape = metrics_shape(cfg);
  const Box box = domain.box();
  Grid m_grid = eval_on_grid(ref.m, box, shape, cfg.threads);
  Grid u_grid = eval_on_grid(ref.u, box, shape, cfg.threads);
  Grid v_grid = eval_on_grid(
      [&ref](const Eigen::VectorXd& x, const DerivOp&) { return ref.potential(x); }, box,
      shape, cfg.threads);
  write_grid_csv(m_grid, out_dir + "/m_reference.csv");
  write_grid_csv(u_grid, out_dir + "/u_reference.csv");
  write_grid_csv(v_grid, out_dir + "/v_reference.csv");

  json rec;
  rec["recovered"] = json{{"hbar", ref.hbar}};
  rec["mass"] = grid_integral(m_grid);
  rec["diagnostics"] = ref.diagnostics;
  rec["grids"] = json{{"m_reference", "m_reference.csv"},
                      {"u_reference", "u_reference.csv"},
                      {"v_reference", "v_reference.csv"}};
  return rec;
}

json run_invert_mode(const ExperimentConfig& cfg, const TorusDomain& domain,
                     const std::string& out_dir) {
  ReferenceSolution ref = make_reference(cfg, domain);
  InverseRun run = run_inverse_once(cfg, domain, ref, cfg.seed(),
                                    cfg.inverse.num_m_observations);
  std::vector<Grid> grids;
  StationaryErrors err = stationary_errors(cfg, domain, ref, run.fields, &grids);

  json rec;
  rec["recovered"] = scalars_json(run.fields);
  rec["reference"] = json{{"hbar", ref.hbar}};
  rec["errors"] = json{{"m", err.m},
                       {"u", err.u},
                       {"v", err.v},
                       {"v_minus_hbar", err.v_minus_hbar}};
  rec["diagnostics"] = diagnostics_json(run.diagnostics);
  rec["diagnostics"]["pde_residual_norm"] = run.pde_residual_norm;
  rec["diagnostics"]["reference"] = ref.diagnostics;
  json grid_refs;
  for (int g = 0; g < 8; ++g) {
    const std::string name = std::string(kStationaryGridNames[g]) + ".csv";
    write_grid_csv(grids[g], out_dir + "/" + name);
    grid_refs[kStationaryGridNames[g]] = name;
  }
  rec["grids"] = grid_refs;
  return rec;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double quartile_of(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return i + 1 < v.size() ? v[i] * (1 - frac) + v[i + 1] * frac : v[i];
}

json run_study_mode(const ExperimentConfig& cfg, const TorusDomain& domain,
                    const std::string& out_dir) {
  ReferenceSolution ref = make_reference(cfg, domain);

  std::vector<std::uint64_t> seeds = cfg.seeds;
  if (seeds.size() == 1) {
    seeds.clear();
    for (int s = 0; s < cfg.study.num_seeds; ++s)
      seeds.push_back(cfg.seed() + static_cast<std::uint64_t>(s));
  }
  const auto& counts = cfg.study.observation_counts;

  struct Cell {
    std::uint64_t seed;
    int observations;
    StationaryErrors errors;
    int iterations;
  };
  std::vector<Cell> cells(seeds.size() * counts.size());
  // Fan out (seed x I) cells; each cell is an isolated solve.
  parallel_for(cells.size(), [&](std::size_t idx) {
    const std::size_t si = idx / counts.size();
    const std::size_t ci = idx % counts.size();
    ExperimentConfig cell_cfg = cfg;
    cell_cfg.threads = 1;
    InverseRun run = run_inverse_once(cell_cfg, domain, ref, seeds[si], counts[ci]);
    Cell cell;
    cell.seed = seeds[si];
    cell.observations = counts[ci];
    cell.errors = stationary_errors(cell_cfg, domain, ref, run.fields);
    cell.iterations = run.diagnostics.iterations;
    cells[idx] = cell;
  }, cfg.threads);

  json rows = json::array();
  for (std::size_t ci = 0; ci < counts.size(); ++ci) {
    std::vector<double> em, eu, ev, evh;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      const auto& cell = cells[si * counts.size() + ci];
      em.push_back(cell.errors.m);
      eu.push_back(cell.errors.u);
      ev.push_back(cell.errors.v);
      evh.push_back(cell.errors.v_minus_hbar);
    }
    rows.push_back(json{{"observations", counts[ci]},
                        {"median_m_error", median_of(em)},
                        {"q1_m_error", quartile_of(em, 0.25)},
                        {"q3_m_error", quartile_of(em, 0.75)},
                        {"median_u_error", median_of(eu)},
                        {"median_v_error", median_of(ev)},
                        {"median_v_minus_hbar_error", median_of(evh)}});
  }

  json cell_rows = json::array();
  for (const auto& cell : cells)
    cell_rows.push_back(json{{"seed", cell.seed},
                             {"observations", cell.observations},
                             {"m_error", cell.errors.m},
                             {"u_error", cell.errors.u},
                             {"v_error", cell.errors.v},
                             {"v_minus_hbar_error", cell.errors.v_minus_hbar},
                             {"iterations", cell.iterations}});

  json rec;
  rec["reference"] = json{{"hbar", ref.hbar}};
  rec["study"] = json{{"rows", rows}, {"cells", cell_rows}};
  rec["diagnostics"] = json{{"reference", ref.diagnostics}};
  (void)out_dir;
  return rec;
}

json run_tdinvert_mode(const ExperimentConfig& cfg, const TorusDomain& domain,
                       const std::string& out_dir) {
  const auto& td = cfg.timedep;
  const auto potential = cfg.potential.make(domain.dim);
  const auto terminal = td.terminal_cost.make(domain.dim);
  const auto initial = td.initial_density.make(domain.dim);

  Rng rng(derive_seed(cfg.seed(), SeedSalt::InverseSampling));
  Eigen::MatrixXd samples = rng.uniform_points(td.num_collocation, domain.lo, domain.hi);

  // Shared spec skeleton: the forward reference and the inversion use the same
  // grid, scheme, and kernels; they differ in what is known.
  TimeDependentProblemSpec base;
  base.domain = domain;
  base.collocation = samples;
  base.horizon = td.horizon;
  base.n_time = td.num_intervals;
  base.viscosity = {cfg.viscosity, true};
  base.coupling = cfg.coupling.make(domain);
  base.terminal_cost = terminal;
  base.initial_density = initial;
  base.kernels_u = {td.kernel_u.make(domain)};
  base.kernels_m = {td.kernel_m.make(domain)};
  base.kernel_v = td.kernel_v.make(domain);
  base.alpha_pen = td.alpha_pen;
  base.nugget_eta = td.nugget;
  base.threads = cfg.threads;

  TimeDependentProblemSpec fwd_spec = base;
  fwd_spec.known_potential = potential;
  TimeDependentProblem forward(std::move(fwd_spec));
  TimeSlicedLatentState fwd_state = forward.initial_state();
  GaussNewtonDiagnostics fwd_diag = forward.solve(fwd_state, td.gn);
  TimeSlicedFields fwd_fields = forward.reconstruct(fwd_state);

  const int slices = td.num_intervals + 1;
  // Per-slice observations of the reference density at the first I_m points.
  std::vector<LinearFunctional> m_funcs;
  for (int i = 0; i < td.num_m_observations; ++i)
    m_funcs.push_back(LinearFunctional::point_eval(samples.row(i)));
  Eigen::MatrixXd m_data(slices, td.num_m_observations);
  Rng noise(derive_seed(cfg.seed(), SeedSalt::MNoise));
  for (int k = 0; k < slices; ++k)
    for (int i = 0; i < td.num_m_observations; ++i)
      m_data(k, i) = fwd_fields.m[k].value(samples.row(i)) +
                     cfg.inverse.noise_std * noise.normal();

  VObservations v_obs;
  if (td.num_v_observations > 0) {
    Rng vnoise(derive_seed(cfg.seed(), SeedSalt::VNoise));
    v_obs.data.resize(td.num_v_observations);
    v_obs.noise_std =
        Eigen::VectorXd::Constant(td.num_v_observations, cfg.inverse.noise_std);
    for (int i = 0; i < td.num_v_observations; ++i) {
      v_obs.functionals.push_back(LinearFunctional::point_eval(samples.row(i)));
      v_obs.data[i] = potential(samples.row(i)) + cfg.inverse.noise_std * vnoise.normal();
    }
  }

  TimeDependentProblemSpec inv_spec = base;
  inv_spec.m_obs_functionals = m_funcs;
  inv_spec.m_obs_data = m_data;
  inv_spec.m_obs_gamma = Eigen::VectorXd::Constant(slices, cfg.inverse.noise_std);
  inv_spec.v_obs = v_obs;
  TimeDependentProblem inverse(std::move(inv_spec));
  TimeSlicedLatentState inv_state = inverse.initial_state();
  GaussNewtonDiagnostics inv_diag = inverse.solve(inv_state, td.gn);
  TimeSlicedFields inv_fields = inverse.reconstruct(inv_state);

  // Metrics: space-time grids for u and m, a spatial grid for V.
  const int nx = cfg.metrics_grid > 0 ? cfg.metrics_grid : 128;
  require(domain.dim == 1, "time-dependent metrics grids expect a 1D domain");
  Box box = domain.box();
  Box st_box{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2)};
  st_box.lo << 0.0, domain.lo[0];
  st_box.hi << td.horizon * (1.0 + 1.0 / td.num_intervals), domain.hi[0];

  auto stack_slices = [&](const std::vector<RepresenterField>& fields) {
    Grid g = make_grid(st_box, {slices, nx});
    for (int k = 0; k < slices; ++k)
      for (int i = 0; i < nx; ++i) {
        Eigen::VectorXd x(1);
        x[0] = domain.lo[0] + (domain.hi[0] - domain.lo[0]) * i / nx;
        g.values[k * nx + i] = fields[k].value(x);
      }
    return g;
  };
  Grid m_rec = stack_slices(inv_fields.m);
  Grid m_ref = stack_slices(fwd_fields.m);
  Grid u_rec = stack_slices(inv_fields.u);
  Grid u_ref = stack_slices(fwd_fields.u);
  Grid v_rec = eval_on_grid(inv_fields.v->as_field_fn(), box, {nx}, cfg.threads);
  Grid v_ref = eval_on_grid(
      [&potential](const Eigen::VectorXd& x, const DerivOp&) { return potential(x); }, box,
      {nx}, cfg.threads);

  // Per-slice mass of the recovered and reference densities.
  json mass_rows = json::array();
  double max_mass_gap = 0.0;
  for (int k = 0; k < slices; ++k) {
    Grid mk_rec = make_grid(box, {nx}), mk_ref = make_grid(box, {nx});
    for (int i = 0; i < nx; ++i) {
      Eigen::VectorXd x(1);
      x[0] = domain.lo[0] + (domain.hi[0] - domain.lo[0]) * i / nx;
      mk_rec.values[i] = inv_fields.m[k].value(x);
      mk_ref.values[i] = fwd_fields.m[k].value(x);
    }
    const double rec_mass = grid_integral(mk_rec);
    const double ref_mass = grid_integral(mk_ref);
    max_mass_gap = std::max(max_mass_gap, std::abs(rec_mass - ref_mass));
    mass_rows.push_back(json{{"slice", k}, {"recovered", rec_mass}, {"reference", ref_mass}});
  }

  const Eigen::VectorXd scheme_residuals = inverse.residuals(inv_state);
  const int m_pts = static_cast<int>(samples.rows());
  const Eigen::VectorXd tail = scheme_residuals.tail(2 * m_pts);  // terminal + initial rows

  json rec;
  rec["recovered"] = json{{"nu", inv_fields.nu}};
  rec["reference"] = json{{"source", "forward"}};
  rec["errors"] = json{{"m", l2_grid_error(m_rec, m_ref)},
                       {"u", l2_grid_error(u_rec, u_ref)},
                       {"v", l2_grid_error(v_rec, v_ref)},
                       {"max_mass_gap", max_mass_gap},
                       {"boundary_condition_max", tail.cwiseAbs().maxCoeff()}};
  rec["per_slice_mass"] = mass_rows;
  rec["diagnostics"] = diagnostics_json(inv_diag);
  rec["diagnostics"]["forward"] = diagnostics_json(fwd_diag);
  json grid_refs;
  const std::pair<const char*, const Grid*> grids[] = {
      {"m_recovered", &m_rec}, {"m_reference", &m_ref}, {"u_recovered", &u_rec},
      {"u_reference", &u_ref}, {"v_recovered", &v_rec}, {"v_reference", &v_ref}};
  for (const auto& [name, grid] : grids) {
    const std::string file = std::string(name) + ".csv";
    write_grid_csv(*grid, out_dir + "/" + file);
    grid_refs[name] = file;
  }
  rec["grids"] = grid_refs;
  return rec;
}

}  // namespace

double ResultRecord::number_at(const std::string& dotted_path) const {
  const nlohmann::json* node = &data;
  std::size_t pos = 0;
  while (pos <= dotted_path.size()) {
    const std::size_t dot = dotted_path.find('.', pos);
    const std::string key = dotted_path.substr(pos, dot - pos);
    if (!node->contains(key)) throw InputError("record has no field '" + dotted_path + "'");
    node = &node->at(key);
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  require(node->is_number(), "record field is not a number: " + dotted_path);
  return node->get<double>();
}

ResultRecord run_experiment(const ExperimentConfig& cfg) {
  Timer timer;
  const TorusDomain domain = cfg.domain.make();
  std::filesystem::create_directories(cfg.output_dir);

  json rec;
  if (cfg.mode == "forward")
    rec = run_forward_mode(cfg, domain, cfg.output_dir);
  else if (cfg.mode == "invert")
    rec = run_invert_mode(cfg, domain, cfg.output_dir);
  else if (cfg.mode == "study")
    rec = run_study_mode(cfg, domain, cfg.output_dir);
  else if (cfg.mode == "tdinvert")
    rec = run_tdinvert_mode(cfg, domain, cfg.output_dir);
  else
    throw InputError("unknown mode: " + cfg.mode);

  rec["mode"] = cfg.mode;
  rec["config"] = cfg.echo;
  rec["wall_clock_seconds"] = timer.seconds();

  ResultRecord out{std::move(rec)};
  std::ofstream f(cfg.output_dir + "/record.json");
  if (!f) throw SolverError("cannot write record to " + cfg.output_dir);
  f << out.dump() << '\n';
  return out;
}

}  // namespace mfggp
