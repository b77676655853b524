#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mvoed/bayes_opt.hpp"
#include "mvoed/benchmarks.hpp"
#include "mvoed/config.hpp"
#include "mvoed/convergence.hpp"
#include "mvoed/diffusion.hpp"
#include "mvoed/error.hpp"
#include "mvoed/estimators.hpp"

namespace py = pybind11;
using namespace mvoed;

namespace {

DesignPoint to_design(const std::vector<double>& coords) {
  DesignPoint d;
  d.coords = Eigen::Map<const Vector>(coords.data(), static_cast<Eigen::Index>(coords.size()));
  return d;
}

std::vector<double> from_design(const DesignPoint& d) {
  return {d.coords.data(), d.coords.data() + d.coords.size()};
}

Problem build_problem(const std::string& name, std::optional<double> noise_variance,
                      std::optional<double> prior_mean, std::optional<double> prior_sd,
                      std::optional<std::string> cache) {
  ModelConfig config;
  config.name = name;
  config.noise_variance = noise_variance;
  config.prior_mean = prior_mean;
  config.prior_sd = prior_sd;
  if (cache) config.surrogate_cache = *cache;
  return make_problem(config);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mean-variance Bayesian experimental design";

  auto config_error = py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<EstimationError>(m, "EstimationError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  (void)config_error;

  py::class_<EstimatorConfig>(m, "EstimatorConfig")
      .def(py::init([](std::size_t n, std::optional<std::size_t> m1, std::optional<std::size_t> m2,
                       bool reuse, double lambda_, std::optional<std::uint64_t> crs_seed,
                       std::uint64_t seed, double max_dropped_fraction) {
             EstimatorConfig c;
             c.n_outer = n;
             c.m1 = m1.value_or(n);
             c.m2 = m2.value_or(n);
             c.reuse = reuse;
             c.lambda = lambda_;
             c.crs_seed = crs_seed;
             c.seed = seed;
             c.max_dropped_fraction = max_dropped_fraction;
             c.validate();
             return c;
           }),
           py::arg("n") = 1000, py::arg("m1") = py::none(), py::arg("m2") = py::none(),
           py::arg("reuse") = true, py::arg("lambda_") = 0.0, py::arg("crs_seed") = py::none(),
           py::arg("seed") = 0, py::arg("max_dropped_fraction") = 0.01)
      .def_readwrite("n", &EstimatorConfig::n_outer)
      .def_readwrite("m1", &EstimatorConfig::m1)
      .def_readwrite("m2", &EstimatorConfig::m2)
      .def_readwrite("reuse", &EstimatorConfig::reuse)
      .def_readwrite("lambda_", &EstimatorConfig::lambda)
      .def_readwrite("crs_seed", &EstimatorConfig::crs_seed)
      .def_readwrite("seed", &EstimatorConfig::seed)
      .def_readwrite("max_dropped_fraction", &EstimatorConfig::max_dropped_fraction)
      .def("validate", &EstimatorConfig::validate);

  py::class_<EstimateReport>(m, "EstimateReport")
      .def_property_readonly("design", [](const EstimateReport& r) { return from_design(r.design); })
      .def_readonly("u_hat", &EstimateReport::u_hat)
      .def_readonly("m2a", &EstimateReport::m2a)
      .def_readonly("m2b", &EstimateReport::m2b)
      .def_readonly("m2c", &EstimateReport::m2c)
      .def_readonly("m2_hat", &EstimateReport::m2_hat)
      .def_readonly("v_hat", &EstimateReport::v_hat)
      .def_readonly("j_hat", &EstimateReport::j_hat)
      .def_readonly("u_std_error", &EstimateReport::u_std_error)
      .def_readonly("v_std_error", &EstimateReport::v_std_error)
      .def_readonly("bank_seed", &EstimateReport::bank_seed)
      .def_readonly("dropped", &EstimateReport::dropped)
      .def_readonly("forward_evaluations", &EstimateReport::forward_evaluations)
      .def("__repr__", [](const EstimateReport& r) {
        return "EstimateReport(u_hat=" + std::to_string(r.u_hat) +
               ", v_hat=" + std::to_string(r.v_hat) + ", j_hat=" + std::to_string(r.j_hat) + ")";
      });

  py::class_<Problem>(m, "Problem")
      .def_property_readonly("name", &Problem::name)
      .def_property_readonly("design_dim", &Problem::design_dim)
      .def_property_readonly("parameter_dim", &Problem::parameter_dim)
      .def_property_readonly("observation_dim", &Problem::observation_dim)
      .def_property_readonly("design_lower",
                             [](const Problem& p) { return p.domain().bounds().lower; })
      .def_property_readonly("design_upper",
                             [](const Problem& p) { return p.domain().bounds().upper; });

  m.def("registered_models", &registered_models);
  m.def("make_problem", &build_problem, py::arg("name"), py::arg("noise_variance") = py::none(),
        py::arg("prior_mean") = py::none(), py::arg("prior_sd") = py::none(),
        py::arg("surrogate_cache") = py::none());

  m.def(
      "estimate",
      [](const Problem& p, const std::vector<double>& design, const EstimatorConfig& c,
         std::uint64_t evaluation_index) {
        py::gil_scoped_release release;
        return estimate_objective(p, to_design(design), c, evaluation_index);
      },
      py::arg("problem"), py::arg("design"), py::arg("config"), py::arg("evaluation_index") = 0);

  m.def(
      "lg_exact_expected_utility",
      [](double xi, double prior_var, double noise_var) {
        LinearGaussianSpec s;
        s.prior_var = prior_var;
        s.noise_var = noise_var;
        return lg_exact_expected_utility(xi, s);
      },
      py::arg("xi"), py::arg("prior_var") = 9.0, py::arg("noise_var") = 1.0);
  m.def(
      "lg_exact_utility_variance",
      [](double xi, double prior_var, double noise_var) {
        LinearGaussianSpec s;
        s.prior_var = prior_var;
        s.noise_var = noise_var;
        return lg_exact_utility_variance(xi, s);
      },
      py::arg("xi"), py::arg("prior_var") = 9.0, py::arg("noise_var") = 1.0);
  m.def("nonlinear_forward", &nonlinear_forward, py::arg("theta"), py::arg("xi"));

  m.def(
      "optimize",
      [](const Problem& p, const EstimatorConfig& c, std::size_t n_init, std::size_t budget,
         double kappa, const std::string& acquisition, std::uint64_t seed) {
        BoConfig bo;
        bo.n_init = n_init;
        bo.budget = budget;
        bo.estimator = c;
        bo.proposal.kappa = kappa;
        if (acquisition == "ucb") {
          bo.proposal.acquisition = Acquisition::kUcb;
        } else if (acquisition == "ei") {
          bo.proposal.acquisition = Acquisition::kExpectedImprovement;
        } else {
          throw ConfigError("acquisition must be 'ucb' or 'ei'");
        }
        bo.seed = seed;
        BoResult result;
        {
          py::gil_scoped_release release;
          result = run_bo(p, bo);
        }
        py::list trace;
        for (const auto& e : result.trace) {
          py::dict row;
          row["iteration"] = e.iteration;
          row["design"] = from_design(e.report.design);
          row["u_hat"] = e.report.u_hat;
          row["v_hat"] = e.report.v_hat;
          row["j_hat"] = e.report.j_hat;
          row["best_so_far"] = e.best_so_far;
          trace.append(row);
        }
        py::dict out;
        out["best_design"] = from_design(result.state.best_design);
        out["best_value"] = result.state.best_value;
        out["skipped"] = result.state.skipped;
        out["trace"] = trace;
        return out;
      },
      py::arg("problem"), py::arg("config"), py::arg("n_init") = 5, py::arg("budget") = 25,
      py::arg("kappa") = 2.0, py::arg("acquisition") = "ucb", py::arg("seed") = 0);

  m.def(
      "rate_study",
      [](const Problem& p, const std::vector<double>& design, const std::string& estimator,
         std::vector<std::size_t> ladder, std::size_t replicates, std::uint64_t master_seed,
         double lambda_) {
        RateStudyConfig c;
        c.tag = parse_estimator_tag(estimator);
        c.ladder = std::move(ladder);
        c.replicates = replicates;
        c.master_seed = master_seed;
        c.lambda = lambda_;
        RateStudy s;
        {
          py::gil_scoped_release release;
          s = run_rate_study(p, to_design(design), c);
        }
        py::list rungs;
        for (const auto& r : s.rungs) {
          py::dict row;
          row["n"] = r.n;
          row["mean"] = r.mean;
          row["variance"] = r.variance;
          row["bias"] = r.bias;
          rungs.append(row);
        }
        py::dict out;
        out["truth"] = s.truth;
        out["truth_is_closed_form"] = s.truth_is_closed_form;
        out["variance_slope"] = s.variance_fit().slope;
        out["bias_slope"] = s.bias_fit().slope;
        out["rungs"] = rungs;
        return out;
      },
      py::arg("problem"), py::arg("design"), py::arg("estimator") = "V",
      py::arg("ladder") = std::vector<std::size_t>{100, 316, 1000, 3162, 10000},
      py::arg("replicates") = 10, py::arg("master_seed") = 0, py::arg("lambda_") = 0.0);

  m.def(
      "solve_diffusion",
      [](double theta_x, double theta_y, int cells, double dt, double final_time, int layout) {
        PdeConfig c;
        c.cells = cells;
        c.dt = dt;
        c.final_time = final_time;
        if (layout != 0) c.obstacles = building_layout(layout);
        DiffusionField f;
        {
          py::gil_scoped_release release;
          f = solve_diffusion(theta_x, theta_y, c);
        }
        return Matrix(f.values());
      },
      py::arg("theta_x"), py::arg("theta_y"), py::arg("cells") = 100, py::arg("dt") = 5e-4,
      py::arg("final_time") = 0.16, py::arg("layout") = 0);
}
