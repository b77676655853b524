#pragma once

// Empirical bias and variance rates of the estimators over a sample-size
// ladder, and the common-random-sampling smoothness comparison.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvoed/estimators.hpp"
#include "mvoed/problem.hpp"

namespace mvoed {

enum class EstimatorTag { kU, kM2, kV, kJ };

std::string to_string(EstimatorTag tag);
/// Accepts "u", "m2", "v", "j" (case-insensitive). Throws ConfigError.
EstimatorTag parse_estimator_tag(const std::string& text);

double select_estimate(const EstimateReport& report, EstimatorTag tag);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root mean square of the log residuals
};

/// Least-squares line through (log n, log value). Needs >= 3 points and
/// positive values; throws EstimationError otherwise.
LogLogFit fit_loglog_slope(const std::vector<double>& ladder, const std::vector<double>& values);

struct RateStudyConfig {
  EstimatorTag tag = EstimatorTag::kV;
  std::vector<std::size_t> ladder = {100, 316, 1000, 3162, 10000};
  std::size_t replicates = 10;
  std::uint64_t master_seed = 0;
  double lambda = 0.0;
  /// Sweep M1 = M2 along the ladder with N fixed and independent inner
  /// samples, instead of the reuse ladder N = M1 = M2.
  std::optional<std::size_t> fixed_outer;
  /// Truth used for the bias column. Defaults to the closed form when the
  /// problem has one, otherwise a reference estimate (see below).
  std::optional<double> truth;
  /// Reference estimate: mean of `reference_replicates` reuse estimates at
  /// N = reference_factor * top rung.
  std::size_t reference_factor = 10;
  std::size_t reference_replicates = 20;
};

struct RateRung {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased replicate variance
  double bias = 0.0;      // |mean - truth|
  std::vector<double> values;
};

struct RateStudy {
  EstimatorTag tag = EstimatorTag::kV;
  DesignPoint design;
  std::size_t replicates = 0;
  double truth = 0.0;
  bool truth_is_closed_form = false;
  std::vector<RateRung> rungs;

  LogLogFit variance_fit() const;
  LogLogFit bias_fit() const;
};

/// Closed-form value of the tagged quantity when the problem has one
/// (the linear-Gaussian benchmark), otherwise nullopt.
std::optional<double> closed_form_truth(const Problem& problem, const DesignPoint& design,
                                        EstimatorTag tag, double lambda);

/// Seed for replicate r of rung k; disjoint across (k, r).
std::uint64_t replicate_seed(std::uint64_t master, std::size_t rung, std::size_t replicate);

RateStudy run_rate_study(const Problem& problem, const DesignPoint& design,
                         const RateStudyConfig& config);

struct CrsStudy {
  std::vector<double> v_with_crs;
  std::vector<double> v_without_crs;
  double tv_with_crs = 0.0;
  double tv_without_crs = 0.0;
};

double total_variation(const std::vector<double>& curve);

/// V_hat along a 1D design grid (>= 50 points), once with one shared bank
/// and once with a fresh bank per design.
CrsStudy crs_smoothness_study(const Problem& problem, double lambda,
                              const std::vector<DesignPoint>& grid, std::size_t n,
                              std::uint64_t seed);

}  // namespace mvoed
