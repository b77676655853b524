#include "mvoed/convergence.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <fmt/format.h>

#include "mvoed/benchmarks.hpp"
#include "mvoed/error.hpp"

namespace mvoed {

std::string to_string(EstimatorTag tag) {
  switch (tag) {
    case EstimatorTag::kU: return "u";
    case EstimatorTag::kM2: return "m2";
    case EstimatorTag::kV: return "v";
    case EstimatorTag::kJ: return "j";
  }
  return "?";
}

EstimatorTag parse_estimator_tag(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "u") return EstimatorTag::kU;
  if (t == "m2") return EstimatorTag::kM2;
  if (t == "v") return EstimatorTag::kV;
  if (t == "j") return EstimatorTag::kJ;
  throw ConfigError(fmt::format("unknown estimator '{}' (expected u, m2, v or j)", text));
}

double select_estimate(const EstimateReport& report, EstimatorTag tag) {
  switch (tag) {
    case EstimatorTag::kU: return report.u_hat;
    case EstimatorTag::kM2: return report.m2_hat;
    case EstimatorTag::kV: return report.v_hat;
    case EstimatorTag::kJ: return report.j_hat;
  }
  return 0.0;
}

LogLogFit fit_loglog_slope(const std::vector<double>& ladder, const std::vector<double>& values) {
  if (ladder.size() != values.size()) throw EstimationError("slope fit: size mismatch");
  if (ladder.size() < 3) throw EstimationError("slope fit needs at least 3 points");
  const std::size_t n = ladder.size();
  std::vector<double> x(n), y(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(ladder[k] > 0.0) || !(values[k] > 0.0)) {
      throw EstimationError(fmt::format("slope fit needs positive values (point {}: {:g}, {:g})",
                                        k, ladder[k], values[k]));
    }
    x[k] = std::log(ladder[k]);
    y[k] = std::log(values[k]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (!(sxx > 0.0)) throw EstimationError("slope fit needs at least two distinct sizes");
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = y[k] - (fit.intercept + fit.slope * x[k]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

LogLogFit RateStudy::variance_fit() const {
  std::vector<double> n, v;
  for (const auto& r : rungs) {
    n.push_back(static_cast<double>(r.n));
    v.push_back(r.variance);
  }
  return fit_loglog_slope(n, v);
}

LogLogFit RateStudy::bias_fit() const {
  std::vector<double> n, b;
  for (const auto& r : rungs) {
    n.push_back(static_cast<double>(r.n));
    b.push_back(r.bias);
  }
  return fit_loglog_slope(n, b);
}

std::optional<double> closed_form_truth(const Problem& problem, const DesignPoint& design,
                                        EstimatorTag tag, double lambda) {
  if (problem.name() != "lingauss-1d") return std::nullopt;
  const auto* prior = dynamic_cast<const GaussianPrior*>(&problem.prior());
  if (prior == nullptr) return std::nullopt;
  LinearGaussianSpec spec;
  spec.prior_mean = prior->mean()[0];
  spec.prior_var = prior->std_dev()[0] * prior->std_dev()[0];
  spec.noise_var = problem.noise().variances()[0];
  const double xi = design.coords[0];
  const double u = lg_exact_expected_utility(xi, spec);
  const double v = lg_exact_utility_variance(xi, spec);
  switch (tag) {
    case EstimatorTag::kU: return u;
    case EstimatorTag::kM2: return v + u * u;
    case EstimatorTag::kV: return v;
    case EstimatorTag::kJ: return u - lambda * v;
  }
  return std::nullopt;
}

std::uint64_t replicate_seed(std::uint64_t master, std::size_t rung, std::size_t replicate) {
  return derive_seed(derive_seed(master, StreamTag::kReplicate, rung), StreamTag::kReplicate,
                     replicate);
}

RateStudy run_rate_study(const Problem& problem, const DesignPoint& design,
                         const RateStudyConfig& config) {
  if (config.ladder.empty()) throw ConfigError("rate study ladder is empty");
  for (std::size_t k = 1; k < config.ladder.size(); ++k) {
    if (config.ladder[k] <= config.ladder[k - 1]) {
      throw ConfigError("rate study ladder must be strictly increasing");
    }
  }
  if (config.replicates < 10) throw ConfigError("rate study needs at least 10 replicates");

  const auto make_config = [&](std::size_t n, std::uint64_t seed) {
    EstimatorConfig c;
    if (config.fixed_outer) {
      c.n_outer = *config.fixed_outer;
      c.m1 = n;
      c.m2 = n;
      c.reuse = false;
    } else {
      c = EstimatorConfig::reusing(n);
    }
    c.lambda = config.lambda;
    c.crs_seed = seed;
    return c;
  };

  RateStudy study;
  study.tag = config.tag;
  study.design = design;
  study.replicates = config.replicates;

  if (config.truth) {
    study.truth = *config.truth;
  } else if (auto exact = closed_form_truth(problem, design, config.tag, config.lambda)) {
    study.truth = *exact;
    study.truth_is_closed_form = true;
  } else {
    if (config.reference_replicates == 0 || config.reference_factor == 0) {
      throw ConfigError("reference truth needs at least one replicate and a positive factor");
    }
    const std::size_t n_ref = config.reference_factor * config.ladder.back();
    double sum = 0.0;
    for (std::size_t r = 0; r < config.reference_replicates; ++r) {
      EstimatorConfig c = EstimatorConfig::reusing(n_ref, config.lambda);
      c.crs_seed = replicate_seed(config.master_seed, config.ladder.size(), r);
      sum += select_estimate(estimate_objective(problem, design, c), config.tag);
    }
    study.truth = sum / static_cast<double>(config.reference_replicates);
  }

  for (std::size_t k = 0; k < config.ladder.size(); ++k) {
    RateRung rung;
    rung.n = config.ladder[k];
    for (std::size_t r = 0; r < config.replicates; ++r) {
      const EstimatorConfig c = make_config(rung.n, replicate_seed(config.master_seed, k, r));
      rung.values.push_back(select_estimate(estimate_objective(problem, design, c), config.tag));
    }
    const double count = static_cast<double>(rung.values.size());
    double sum = 0.0;
    for (double v : rung.values) sum += v;
    rung.mean = sum / count;
    double ss = 0.0;
    for (double v : rung.values) ss += (v - rung.mean) * (v - rung.mean);
    rung.variance = ss / (count - 1.0);
    rung.bias = std::abs(rung.mean - study.truth);
    study.rungs.push_back(std::move(rung));
  }
  return study;
}

double total_variation(const std::vector<double>& curve) {
  double tv = 0.0;
  for (std::size_t k = 1; k < curve.size(); ++k) tv += std::abs(curve[k] - curve[k - 1]);
  return tv;
}

CrsStudy crs_smoothness_study(const Problem& problem, double lambda,
                              const std::vector<DesignPoint>& grid, std::size_t n,
                              std::uint64_t seed) {
  if (problem.design_dim() != 1) throw ConfigError("CRS study needs a 1D design space");
  if (grid.size() < 50) throw ConfigError("CRS study needs a grid of at least 50 designs");

  EstimatorConfig shared = EstimatorConfig::reusing(n, lambda, derive_seed(seed, StreamTag::kUser));
  EstimatorConfig fresh = EstimatorConfig::reusing(n, lambda);
  fresh.seed = seed;

  CrsStudy study;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    study.v_with_crs.push_back(estimate_objective(problem, grid[k], shared, k).v_hat);
    study.v_without_crs.push_back(estimate_objective(problem, grid[k], fresh, k).v_hat);
  }
  study.tv_with_crs = total_variation(study.v_with_crs);
  study.tv_without_crs = total_variation(study.v_without_crs);
  return study;
}

}  // namespace mvoed
