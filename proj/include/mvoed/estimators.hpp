#pragma once

// Monte Carlo estimators of the expected information gain U, the utility
// second moment M2 = M2a + M2b + M2c, the utility variance V = M2 - U^2 and
// the mean-variance objective J = U - lambda * V.
//
// Every estimator works from prior samples only. The marginal likelihood is
// estimated once per outer sample, in log space, and the cached outer terms
// feed all of U, M2a, M2b and M2c.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "mvoed/problem.hpp"

namespace mvoed {

struct EstimatorConfig {
  std::size_t n_outer = 1000;  // N
  std::size_t m1 = 1000;       // inner samples for the marginal likelihood
  std::size_t m2 = 1000;       // inner samples for the M2c numerator
  /// N = M1 = M2 and the inner loops reuse the outer prior samples.
  bool reuse = true;
  double lambda = 0.0;
  /// When set, every design evaluation uses the bank built from this seed.
  std::optional<std::uint64_t> crs_seed;
  /// Base seed for per-evaluation banks when CRS is off.
  std::uint64_t seed = 0;
  /// Fraction of outer samples allowed to have a zero marginal estimate.
  double max_dropped_fraction = 0.01;

  /// Reuse configuration with N = M1 = M2 = n.
  static EstimatorConfig reusing(std::size_t n, double lambda = 0.0,
                                 std::optional<std::uint64_t> crs_seed = std::nullopt);

  /// Throws ConfigError on N, M1, M2 < 2 or a reuse config with unequal sizes.
  void validate() const;
};

/// Per-outer-sample quantities shared by all estimators. Dropped outer
/// samples (zero marginal estimate) are not stored, only counted.
struct OuterTerms {
  Vector log_likelihood;  // log p(y_i | theta_i, xi)
  Vector log_marginal;    // log p_hat(y_i | xi)
  Vector m2c_ratio;       // (1/M2 sum_k p_k log p_k) / p_hat
  std::size_t requested = 0;
  std::size_t dropped = 0;
  std::size_t forward_evaluations = 0;

  std::size_t kept() const { return static_cast<std::size_t>(log_likelihood.size()); }
};

struct UtilityEstimate {
  double u_hat = 0.0;
  Vector summands;  // log p(y_i|theta_i) - log p_hat(y_i), one per kept sample
  OuterTerms terms;
};

struct EstimateReport {
  DesignPoint design;
  double u_hat = 0.0;
  double m2a = 0.0;
  double m2b = 0.0;
  double m2c = 0.0;
  double m2_hat = 0.0;
  double v_hat = 0.0;
  double j_hat = 0.0;
  /// Plug-in standard errors (sample sd / sqrt(N)); v_se uses the delta method.
  double u_std_error = 0.0;
  double v_std_error = 0.0;
  EstimatorConfig config;
  std::uint64_t bank_seed = 0;
  std::size_t dropped = 0;
  std::size_t forward_evaluations = 0;

  /// V_hat is reported unclamped and can be negative at small N.
  bool negative_variance() const { return v_hat < 0.0; }
};

/// log((1/M) sum_j exp(values_j)) with a max shift. Returns -inf when every
/// value is -inf.
double log_mean_exp(const Eigen::Ref<const Eigen::ArrayXd>& values);

/// log p_hat(y | xi) = log((1/M1) sum_j p(y | theta_j, xi)).
double estimate_marginal_log_likelihood(const Problem& problem, const Observation& y,
                                        const std::vector<ParameterSample>& inner,
                                        const DesignPoint& design);

/// Forms all outer terms for one design from one bank.
OuterTerms compute_outer_terms(const Problem& problem, const DesignPoint& design,
                               const SampleBank& bank, const EstimatorConfig& config);

UtilityEstimate estimate_expected_utility(const Problem& problem, const DesignPoint& design,
                                          const SampleBank& bank, const EstimatorConfig& config);

double estimate_m2a(const OuterTerms& terms);
double estimate_m2b(const OuterTerms& terms);
double estimate_m2c(const OuterTerms& terms);
double estimate_m2c(const Problem& problem, const DesignPoint& design, const SampleBank& bank,
                    const EstimatorConfig& config);

/// Full report for one design evaluated against a given bank.
EstimateReport estimate_from_bank(const Problem& problem, const DesignPoint& design,
                                  const SampleBank& bank, const EstimatorConfig& config);

double estimate_variance(const Problem& problem, const DesignPoint& design, const SampleBank& bank,
                         const EstimatorConfig& config);

/// Seed of the bank used for the `evaluation_index`-th design evaluation:
/// the CRS seed when set, otherwise a fresh seed derived from config.seed.
std::uint64_t bank_seed_for(const EstimatorConfig& config, std::uint64_t evaluation_index);

/// Builds the bank for this evaluation and returns the full report.
EstimateReport estimate_objective(const Problem& problem, const DesignPoint& design,
                                  const EstimatorConfig& config,
                                  std::uint64_t evaluation_index = 0);

/// Reference u_KL(xi, y) from a uniform midpoint grid over the parameter
/// space (dimension <= 2). `bounds` defaults to the prior's grid box.
double exact_utility_grid(const Problem& problem, const DesignPoint& design, const Observation& y,
                          std::size_t grid_size, const std::optional<Box>& bounds = std::nullopt);

}  // namespace mvoed
