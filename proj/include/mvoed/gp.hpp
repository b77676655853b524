#pragma once

// Gaussian-process regression with a squared-exponential kernel,
//   k(x, x') = sf2 * exp(-1/2 sum_d ((x_d - x'_d) / l_d)^2),
// fitted on inputs mapped to the unit box and standardized targets.
// Hyperparameters maximize the log marginal likelihood over a fixed grid
// followed by a deterministic coordinate search in log space.

#include <optional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "mvoed/problem.hpp"

namespace mvoed {

struct GpHyperparameters {
  Vector length_scales;        // per input dimension, in normalized units
  double signal_variance = 1;  // in standardized target units
  double noise_variance = 1e-2;
};

struct HyperConfig {
  /// Length-scale grid: `length_points` log-spaced values on
  /// [length_min, length_max], shared by every dimension.
  double length_min = 0.05;
  double length_max = 2.0;
  int length_points = 7;
  std::vector<double> signal_grid = {0.1, 1.0, 10.0};
  std::vector<double> noise_grid = {1e-4, 1e-2, 1e-1};
  /// Fixes the noise variance (standardized units) instead of fitting it.
  /// Zero gives an interpolating GP, held together by jitter if needed.
  std::optional<double> fixed_noise;
  int refinement_steps = 20;
};

struct TrainingPair {
  Vector design;
  double value = 0.0;
};

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;  // latent function variance, original units
  double stddev() const;
};

class GpSurrogate {
 public:
  /// Jitter ladder tried in turn when the kernel matrix is not positive
  /// definite; the last entry is the largest jitter accepted.
  static constexpr double kMaxJitter = 1e-6;

  GpSurrogate(std::vector<TrainingPair> pairs, Box bounds, GpHyperparameters hyper);

  GpPrediction predict(const ConstVectorRef& x) const;
  /// Log marginal likelihood of the standardized targets.
  double log_marginal_likelihood() const { return log_marginal_likelihood_; }

  const GpHyperparameters& hyperparameters() const { return hyper_; }
  const std::vector<TrainingPair>& pairs() const { return pairs_; }
  const Box& bounds() const { return bounds_; }
  std::size_t dim() const { return bounds_.dim(); }
  double jitter() const { return jitter_; }
  double target_mean() const { return target_mean_; }
  double target_scale() const { return target_scale_; }
  /// Prior standard deviation of f far from the data, original units.
  double prior_stddev() const;
  /// Observation-noise standard deviation, original units.
  double noise_stddev() const;

 private:
  Vector normalize(const ConstVectorRef& x) const;
  double kernel(const ConstVectorRef& a, const ConstVectorRef& b) const;

  std::vector<TrainingPair> pairs_;
  Box bounds_;
  GpHyperparameters hyper_;
  Matrix inputs_;  // d x n, normalized
  Vector targets_;  // standardized
  double target_mean_ = 0.0;
  double target_scale_ = 1.0;
  double jitter_ = 0.0;
  Eigen::LLT<Matrix> chol_;
  Vector alpha_;
  double log_marginal_likelihood_ = 0.0;
};

/// Fits hyperparameters and returns the conditioned GP. Needs >= 2 pairs
/// inside `bounds`; equal targets are fitted with a unit scale floor.
GpSurrogate gp_fit(const std::vector<TrainingPair>& pairs, const Box& bounds,
                   const HyperConfig& config = {});

}  // namespace mvoed
