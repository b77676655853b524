#include "commands.hpp"

#include <cstdint>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "mvoed/bayes_opt.hpp"
#include "mvoed/config.hpp"
#include "mvoed/convergence.hpp"
#include "mvoed/diffusion.hpp"
#include "mvoed/error.hpp"
#include "mvoed/estimators.hpp"
#include "mvoed/report_io.hpp"

namespace mvoed::cli {
namespace {

struct Flags {
  std::string config;
  std::string model;
  double lambda = 0.0;
  std::size_t n = 0;
  std::size_t m1 = 0;
  std::size_t m2 = 0;
  bool no_reuse = false;
  std::uint64_t crs_seed = 0;
  std::uint64_t seed = 0;
  double noise_variance = 0.0;
  std::string obstacles;
  int layout = 0;
  int resolution = 0;
  std::string cache;
  std::string out;
  std::vector<double> design;
  // optimize
  std::size_t budget = 0;
  std::size_t init = 0;
  double kappa = 0.0;
  std::string acquisition;
  // sweep / crs-study
  std::vector<std::string> grid;
  std::size_t max_rows = 100000;
  // convergence
  std::string estimator = "v";
  std::vector<std::size_t> ladder = {100, 316, 1000, 3162, 10000};
  std::size_t replicates = 10;
  std::size_t fixed_outer = 0;
  double truth = 0.0;
  std::size_t reference_factor = 10;
  std::size_t reference_replicates = 20;
  // pde-table
  int cells = 0;
  double dt = 0.0;
  double final_time = 0.0;
};

void add_model_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run configuration; flags override its keys");
  sub->add_option("--model", f.model, "lingauss-1d, nonlinear-1d, nonlinear-2d, constant-1d, diffusion-<m>s");
  sub->add_option("--noise-variance", f.noise_variance, "Observation noise variance");
  sub->add_option("--obstacles", f.obstacles, "Obstacle JSON file (diffusion models)");
  sub->add_option("--layout", f.layout, "Built-in building layout, 4 or 5 (diffusion models)");
  sub->add_option("--resolution", f.resolution, "Surrogate lattice nodes per axis");
  sub->add_option("--cache", f.cache, "Surrogate table cache file");
  sub->add_option("--out", f.out, "Output file (default: stdout)");
}

void add_estimator_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--lambda", f.lambda, "Variance penalty");
  sub->add_option("--n", f.n, "Outer samples N (also sets M1 = M2 = N)");
  sub->add_option("--m1", f.m1, "Inner samples for the marginal likelihood");
  sub->add_option("--m2", f.m2, "Inner samples for the second moment");
  sub->add_flag("--no-reuse", f.no_reuse, "Draw independent inner samples");
  sub->add_option("--crs-seed", f.crs_seed, "Share one sample bank across designs");
  sub->add_option("--seed", f.seed, "Master seed");
}

bool given(const CLI::App* sub, const std::string& flag) {
  const CLI::Option* opt = sub->get_option_no_throw(flag);
  return opt != nullptr && opt->count() > 0;
}

RunConfig resolve(const CLI::App* sub, const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (given(sub, "--model")) c.model.name = f.model;
  if (given(sub, "--noise-variance")) c.model.noise_variance = f.noise_variance;
  if (given(sub, "--obstacles") && given(sub, "--layout")) {
    throw ConfigError("give either --obstacles or --layout, not both");
  }
  if (given(sub, "--obstacles")) c.model.pde.obstacles = load_obstacles(f.obstacles);
  if (given(sub, "--layout")) c.model.pde.obstacles = building_layout(f.layout);
  if (given(sub, "--resolution")) c.model.surrogate_resolution = f.resolution;
  if (given(sub, "--cache")) c.model.surrogate_cache = f.cache;
  if (given(sub, "--out")) c.output = f.out;
  if (given(sub, "--lambda")) c.estimator.lambda = f.lambda;
  if (given(sub, "--n")) c.estimator.n_outer = c.estimator.m1 = c.estimator.m2 = f.n;
  if (given(sub, "--m1")) c.estimator.m1 = f.m1;
  if (given(sub, "--m2")) c.estimator.m2 = f.m2;
  if (f.no_reuse) c.estimator.reuse = false;
  if (given(sub, "--crs-seed")) c.estimator.crs_seed = f.crs_seed;
  if (given(sub, "--seed")) {
    c.seed = f.seed;
    c.estimator.seed = f.seed;
  }
  if (given(sub, "--design")) c.design = f.design;
  if (given(sub, "--budget")) c.bo_budget = f.budget;
  if (given(sub, "--init")) c.bo_init = f.init;
  if (given(sub, "--kappa")) c.kappa = f.kappa;
  if (given(sub, "--acquisition")) {
    if (f.acquisition == "ucb") {
      c.acquisition = Acquisition::kUcb;
    } else if (f.acquisition == "ei") {
      c.acquisition = Acquisition::kExpectedImprovement;
    } else {
      throw ConfigError(fmt::format("unknown acquisition '{}' (expected ucb or ei)", f.acquisition));
    }
  }
  return c;
}

void emit(const RunConfig& c, const std::string& content, std::ostream& out) {
  if (c.output) {
    write_text_file(*c.output, content);
  } else {
    out << content;
  }
}

DesignPoint require_design(const RunConfig& c) {
  if (!c.design || c.design->empty()) throw ConfigError("missing required key 'design'");
  return DesignPoint{Eigen::Map<const Vector>(c.design->data(),
                                              static_cast<Eigen::Index>(c.design->size()))};
}

struct Axis {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double at(std::size_t k) const {
    return count == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  }
};

Axis parse_axis(const std::string& text) {
  Axis a;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  long long count = 0;
  if (!(in >> a.lo >> c1 >> a.hi >> c2 >> count) || c1 != ':' || c2 != ':' || !in.eof() ||
      count < 1) {
    throw ConfigError(fmt::format("grid axis '{}' is not lo:hi:count with count >= 1", text));
  }
  a.count = static_cast<std::size_t>(count);
  return a;
}

std::vector<DesignPoint> make_grid(const std::vector<std::string>& specs, std::size_t design_dim,
                                   std::size_t max_rows) {
  if (specs.empty()) throw ConfigError("missing required key 'grid'");
  if (specs.size() != design_dim) {
    throw ConfigError(fmt::format("grid has {} axes, the design has {} coordinates", specs.size(),
                                  design_dim));
  }
  std::vector<Axis> axes;
  std::size_t rows = 1;
  for (const auto& s : specs) {
    axes.push_back(parse_axis(s));
    if (axes.back().count > max_rows || rows > max_rows / axes.back().count) {
      throw ConfigError(fmt::format("grid exceeds the row cap of {}", max_rows));
    }
    rows *= axes.back().count;
  }
  std::vector<DesignPoint> grid;
  grid.reserve(rows);
  std::vector<std::size_t> idx(axes.size(), 0);
  for (std::size_t r = 0; r < rows; ++r) {
    Vector x(static_cast<Eigen::Index>(axes.size()));
    for (std::size_t k = 0; k < axes.size(); ++k) x[static_cast<Eigen::Index>(k)] = axes[k].at(idx[k]);
    grid.push_back(DesignPoint{std::move(x)});
    // Last axis varies fastest.
    for (std::size_t k = axes.size(); k-- > 0;) {
      if (++idx[k] < axes[k].count) break;
      idx[k] = 0;
    }
  }
  return grid;
}

int cmd_estimate(const CLI::App* sub, const Flags& f, std::ostream& out) {
  const RunConfig c = resolve(sub, f);
  const Problem problem = make_problem(c.model);
  const DesignPoint design = require_design(c);
  const EstimateReport r = estimate_objective(problem, design, c.estimator, 0);
  emit(c, report_csv_header(problem.design_dim()) + "\n" + report_csv_row(r) + "\n", out);
  return kSuccess;
}

int cmd_sweep(const CLI::App* sub, const Flags& f, std::ostream& out, std::ostream& err) {
  const RunConfig c = resolve(sub, f);
  const Problem problem = make_problem(c.model);
  const auto grid = make_grid(f.grid, problem.design_dim(), f.max_rows);
  std::string csv = report_csv_header(problem.design_dim()) + "\n";
  std::size_t infeasible = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!problem.domain().is_feasible(grid[k].coords)) {
      ++infeasible;
      continue;
    }
    csv += report_csv_row(estimate_objective(problem, grid[k], c.estimator, k)) + "\n";
  }
  if (infeasible > 0) err << fmt::format("skipped {} infeasible grid points\n", infeasible);
  emit(c, csv, out);
  return kSuccess;
}

int cmd_optimize(const CLI::App* sub, const Flags& f, std::ostream& out, std::ostream& err) {
  const RunConfig c = resolve(sub, f);
  const Problem problem = make_problem(c.model);
  BoConfig bo;
  bo.n_init = c.bo_init;
  bo.budget = c.bo_budget;
  bo.estimator = c.estimator;
  bo.proposal.kappa = c.kappa;
  bo.proposal.acquisition = c.acquisition;
  bo.seed = c.seed;
  const BoResult result = run_bo(problem, bo);
  std::string csv = trace_csv_header(problem.design_dim()) + "\n";
  for (const auto& e : result.trace) csv += trace_csv_row(e) + "\n";
  emit(c, csv, out);
  std::string best;
  for (Eigen::Index k = 0; k < result.state.best_design.coords.size(); ++k) {
    best += (k ? "," : "") + format_real(result.state.best_design.coords[k]);
  }
  err << fmt::format("best design [{}] j_hat={} evaluated={} skipped={}\n", best,
                     format_real(result.state.best_value), result.trace.size(),
                     result.state.skipped);
  return kSuccess;
}

int cmd_convergence(const CLI::App* sub, const Flags& f, std::ostream& out) {
  const RunConfig c = resolve(sub, f);
  const Problem problem = make_problem(c.model);
  RateStudyConfig rc;
  rc.tag = parse_estimator_tag(f.estimator);
  rc.ladder = f.ladder;
  rc.replicates = f.replicates;
  rc.master_seed = c.seed;
  rc.lambda = c.estimator.lambda;
  if (given(sub, "--fixed-outer")) rc.fixed_outer = f.fixed_outer;
  if (given(sub, "--truth")) rc.truth = f.truth;
  rc.reference_factor = f.reference_factor;
  rc.reference_replicates = f.reference_replicates;
  const RateStudy study = run_rate_study(problem, require_design(c), rc);
  emit(c, rate_csv(study), out);
  out << rate_summary(study) << "\n";
  return kSuccess;
}

int cmd_pde_table(const CLI::App* sub, const Flags& f, std::ostream& out) {
  RunConfig c = resolve(sub, f);
  if (given(sub, "--cells")) c.model.pde.cells = f.cells;
  if (given(sub, "--dt")) c.model.pde.dt = f.dt;
  if (given(sub, "--final-time")) c.model.pde.final_time = f.final_time;
  if (!c.output) throw ConfigError("missing required key 'out' (cache path)");
  c.model.pde.validate();
  const auto table = build_surrogate(c.model.pde, c.model.surrogate_resolution);
  save_surrogate(*table, *c.output);
  const SurrogateHeader h = read_surrogate_header(*c.output);
  out << "path,resolution,cells,config_hash\n"
      << fmt::format("{},{},{},{:016x}\n", c.output->string(), h.resolution, h.nx, h.config_hash);
  return kSuccess;
}

int cmd_crs_study(const CLI::App* sub, const Flags& f, std::ostream& out, std::ostream& err) {
  const RunConfig c = resolve(sub, f);
  const Problem problem = make_problem(c.model);
  const auto grid = make_grid(f.grid, problem.design_dim(), f.max_rows);
  const CrsStudy study =
      crs_smoothness_study(problem, c.estimator.lambda, grid, c.estimator.n_outer, c.seed);
  emit(c, crs_csv(grid, study), out);
  err << fmt::format("tv_with_crs={} tv_without_crs={}\n", format_real(study.tv_with_crs),
                     format_real(study.tv_without_crs));
  return kSuccess;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mean-variance Bayesian optimal experimental design"};
  app.require_subcommand(1);
  Flags f;

  auto* estimate = app.add_subcommand("estimate", "Estimate U, M2, V and J at one design");
  add_model_flags(estimate, f);
  add_estimator_flags(estimate, f);
  estimate->add_option("--design", f.design, "Design coordinates")->delimiter(',');

  auto* sweep = app.add_subcommand("sweep", "Estimate over a design grid");
  add_model_flags(sweep, f);
  add_estimator_flags(sweep, f);
  sweep->add_option("--grid", f.grid, "Axis lo:hi:count, one per design coordinate");
  sweep->add_option("--max-rows", f.max_rows, "Row cap");

  auto* optimize = app.add_subcommand("optimize", "Bayesian optimization of J");
  add_model_flags(optimize, f);
  add_estimator_flags(optimize, f);
  optimize->add_option("--budget", f.budget, "Acquisition-driven evaluations T");
  optimize->add_option("--init", f.init, "Initial space-filling designs n0");
  optimize->add_option("--kappa", f.kappa, "UCB exploration weight");
  optimize->add_option("--acquisition", f.acquisition, "ucb or ei");

  auto* convergence = app.add_subcommand("convergence", "Bias and variance rates over N");
  add_model_flags(convergence, f);
  add_estimator_flags(convergence, f);
  convergence->add_option("--design", f.design, "Design coordinates")->delimiter(',');
  convergence->add_option("--estimator", f.estimator, "u, m2, v or j");
  convergence->add_option("--ladder", f.ladder, "Sample sizes")->delimiter(',');
  convergence->add_option("--replicates", f.replicates, "Replicates per rung (>= 10)");
  convergence->add_option("--fixed-outer", f.fixed_outer, "Fix N and sweep M1 = M2 instead");
  convergence->add_option("--truth", f.truth, "Reference value for the bias column");
  convergence->add_option("--reference-factor", f.reference_factor, "Reference N / top rung");
  convergence->add_option("--reference-replicates", f.reference_replicates,
                          "Replicates averaged for the reference value");

  auto* pde_table = app.add_subcommand("pde-table", "Build the diffusion surrogate table");
  add_model_flags(pde_table, f);
  pde_table->add_option("--cells", f.cells, "Grid cells per axis");
  pde_table->add_option("--dt", f.dt, "Time step");
  pde_table->add_option("--final-time", f.final_time, "Final time");

  auto* crs = app.add_subcommand("crs-study", "V_hat curves with and without shared samples");
  add_model_flags(crs, f);
  add_estimator_flags(crs, f);
  crs->add_option("--grid", f.grid, "Axis lo:hi:count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? kSuccess : kConfigError;
  }

  try {
    if (estimate->parsed()) return cmd_estimate(estimate, f, out);
    if (sweep->parsed()) return cmd_sweep(sweep, f, out, err);
    if (optimize->parsed()) return cmd_optimize(optimize, f, out, err);
    if (convergence->parsed()) return cmd_convergence(convergence, f, out);
    if (pde_table->parsed()) return cmd_pde_table(pde_table, f, out);
    if (crs->parsed()) return cmd_crs_study(crs, f, out, err);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    err << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const EstimationError& e) {
    err << "estimation error: " << e.what() << "\n";
    return kEstimationError;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUnexpected;
  }
  return kUnexpected;
}

}  // namespace mvoed::cli
