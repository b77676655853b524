#include "mvoed/gp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "mvoed/error.hpp"

namespace mvoed {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr std::array<double, 8> kJitterLadder = {0.0,  1e-12, 1e-11, 1e-10,
                                                 1e-9, 1e-8,  1e-7,  GpSurrogate::kMaxJitter};

// Search box for the coordinate refinement (log space bounds).
constexpr double kMinLength = 1e-3, kMaxLength = 1e2;
constexpr double kMinSignal = 1e-3, kMaxSignal = 1e3;
constexpr double kMinNoise = 1e-8, kMaxNoise = 10.0;

double fit_score(const std::vector<TrainingPair>& pairs, const Box& bounds,
                 const GpHyperparameters& hyper) {
  try {
    return GpSurrogate(pairs, bounds, hyper).log_marginal_likelihood();
  } catch (const EstimationError&) {
    return -std::numeric_limits<double>::infinity();
  }
}

}  // namespace

double GpPrediction::stddev() const { return std::sqrt(std::max(variance, 0.0)); }

GpSurrogate::GpSurrogate(std::vector<TrainingPair> pairs, Box bounds, GpHyperparameters hyper)
    : pairs_(std::move(pairs)), bounds_(std::move(bounds)), hyper_(std::move(hyper)) {
  const auto n = static_cast<Eigen::Index>(pairs_.size());
  const auto d = static_cast<Eigen::Index>(bounds_.dim());
  if (n < 1) throw std::invalid_argument("GP needs at least one training pair");
  if (hyper_.length_scales.size() != d) {
    throw std::invalid_argument("GP length scales do not match the input dimension");
  }
  if (!(hyper_.length_scales.array() > 0.0).all() || !(hyper_.signal_variance > 0.0) ||
      !(hyper_.noise_variance >= 0.0)) {
    throw std::invalid_argument("GP hyperparameters must be positive");
  }

  inputs_.resize(d, n);
  Vector raw(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const TrainingPair& p = pairs_[static_cast<std::size_t>(i)];
    if (p.design.size() != d) throw std::invalid_argument("GP training input has wrong dimension");
    if (!std::isfinite(p.value)) throw std::invalid_argument("GP training target is not finite");
    inputs_.col(i) = normalize(p.design);
    raw[i] = p.value;
  }
  target_mean_ = raw.mean();
  const double spread = std::sqrt((raw.array() - target_mean_).square().mean());
  target_scale_ = spread > 1e-12 * std::max(1.0, std::abs(target_mean_)) ? spread : 1.0;
  targets_ = (raw.array() - target_mean_) / target_scale_;

  Matrix k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      k(i, j) = k(j, i) = kernel(inputs_.col(i), inputs_.col(j));
    }
  }
  bool factored = false;
  for (double jitter : kJitterLadder) {
    Matrix a = k;
    a.diagonal().array() += hyper_.noise_variance + jitter;
    chol_.compute(a);
    if (chol_.info() == Eigen::Success && (chol_.matrixLLT().diagonal().array() > 0.0).all()) {
      jitter_ = jitter;
      factored = true;
      break;
    }
  }
  if (!factored) {
    throw EstimationError(
        fmt::format("GP kernel matrix is not positive definite with jitter {:g}", kMaxJitter));
  }
  alpha_ = chol_.solve(targets_);
  const double log_det = 2.0 * chol_.matrixLLT().diagonal().array().log().sum();
  log_marginal_likelihood_ =
      -0.5 * targets_.dot(alpha_) - 0.5 * log_det - 0.5 * static_cast<double>(n) * kLog2Pi;
}

Vector GpSurrogate::normalize(const ConstVectorRef& x) const {
  Vector out(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double width = bounds_.upper[k] - bounds_.lower[k];
    out[k] = width > 0.0 ? (x[k] - bounds_.lower[k]) / width : 0.0;
  }
  return out;
}

double GpSurrogate::kernel(const ConstVectorRef& a, const ConstVectorRef& b) const {
  const double r2 = ((a - b).array() / hyper_.length_scales.array()).square().sum();
  return hyper_.signal_variance * std::exp(-0.5 * r2);
}

GpPrediction GpSurrogate::predict(const ConstVectorRef& x) const {
  if (x.size() != inputs_.rows()) throw std::invalid_argument("GP query has wrong dimension");
  const Vector z = normalize(x);
  const Eigen::Index n = inputs_.cols();
  Vector ks(n);
  for (Eigen::Index i = 0; i < n; ++i) ks[i] = kernel(z, inputs_.col(i));
  const Vector v = chol_.matrixL().solve(ks);
  double var = hyper_.signal_variance - v.squaredNorm();
  if (var < 0.0) {
    // Rounding can push the variance slightly negative near the data.
    if (var < -1e-10 * hyper_.signal_variance) {
      throw EstimationError(fmt::format("GP predictive variance {:g} is negative", var));
    }
    var = 0.0;
  }
  GpPrediction p;
  p.mean = target_mean_ + target_scale_ * ks.dot(alpha_);
  p.variance = target_scale_ * target_scale_ * var;
  return p;
}

double GpSurrogate::prior_stddev() const {
  return target_scale_ * std::sqrt(hyper_.signal_variance);
}

double GpSurrogate::noise_stddev() const {
  return target_scale_ * std::sqrt(hyper_.noise_variance + jitter_);
}

GpSurrogate gp_fit(const std::vector<TrainingPair>& pairs, const Box& bounds,
                   const HyperConfig& config) {
  if (pairs.size() < 2) throw std::invalid_argument("gp_fit needs at least 2 training pairs");
  for (const auto& p : pairs) {
    if (!bounds.contains(p.design)) throw std::invalid_argument("GP training input outside bounds");
  }
  if (config.length_points < 1 || config.signal_grid.empty() ||
      (config.noise_grid.empty() && !config.fixed_noise)) {
    throw ConfigError("GP hyperparameter grid is empty");
  }
  const auto d = static_cast<Eigen::Index>(bounds.dim());

  std::vector<double> lengths;
  for (int k = 0; k < config.length_points; ++k) {
    const double t = config.length_points == 1 ? 0.0 : double(k) / (config.length_points - 1);
    lengths.push_back(config.length_min * std::pow(config.length_max / config.length_min, t));
  }
  const std::vector<double> noises =
      config.fixed_noise ? std::vector<double>{*config.fixed_noise} : config.noise_grid;

  GpHyperparameters best;
  double best_score = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  for (double l : lengths) {
    for (double sf2 : config.signal_grid) {
      for (double sn2 : noises) {
        GpHyperparameters h{Vector::Constant(d, l), sf2, sn2};
        const double score = fit_score(pairs, bounds, h);
        if (!have_best || score > best_score) {
          best = h;
          best_score = score;
          have_best = true;
        }
      }
    }
  }

  // Coordinate search over log length scales, log sf2 and (unless fixed) log sn2.
  const Eigen::Index coords = d + 1 + (config.fixed_noise ? 0 : 1);
  double step = std::log(2.0);
  for (int it = 0; it < config.refinement_steps; ++it) {
    bool improved = false;
    for (Eigen::Index c = 0; c < coords; ++c) {
      for (double sign : {1.0, -1.0}) {
        GpHyperparameters h = best;
        const double factor = std::exp(sign * step);
        if (c < d) {
          h.length_scales[c] = std::clamp(h.length_scales[c] * factor, kMinLength, kMaxLength);
        } else if (c == d) {
          h.signal_variance = std::clamp(h.signal_variance * factor, kMinSignal, kMaxSignal);
        } else {
          h.noise_variance = std::clamp(h.noise_variance * factor, kMinNoise, kMaxNoise);
        }
        const double score = fit_score(pairs, bounds, h);
        if (score > best_score) {
          best = h;
          best_score = score;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  if (!std::isfinite(best_score)) {
    throw EstimationError("GP fit failed for every hyperparameter candidate");
  }
  return GpSurrogate(pairs, bounds, best);
}

}  // namespace mvoed
