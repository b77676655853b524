#include "mvoed/problem.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "mvoed/error.hpp"

namespace mvoed {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void require_dim(std::size_t actual, std::size_t expected, const char* what) {
  if (actual != expected) {
    throw std::invalid_argument(
        fmt::format("{} has dimension {}, expected {}", what, actual, expected));
  }
}

}  // namespace

void validate_obstacles(const std::vector<Rectangle>& obstacles) {
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const auto& r = obstacles[i];
    if (!(r.xmin < r.xmax && r.ymin < r.ymax)) {
      throw ConfigError(fmt::format("obstacle {} is degenerate", i));
    }
    if (r.xmin < 0.0 || r.xmax > 1.0 || r.ymin < 0.0 || r.ymax > 1.0) {
      throw ConfigError(fmt::format("obstacle {} leaves the unit square", i));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (r.overlaps(obstacles[j])) {
        throw ConfigError(fmt::format("obstacles {} and {} overlap", j, i));
      }
    }
  }
}

bool Box::contains(const ConstVectorRef& x) const {
  if (x.size() != lower.size()) return false;
  return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

GaussianNoiseModel::GaussianNoiseModel(Vector variances) : variances_(std::move(variances)) {
  if (variances_.size() == 0) throw ConfigError("noise model needs at least one component");
  if (!(variances_.array() > 0.0).all() || !variances_.allFinite()) {
    throw ConfigError("noise variances must be finite and strictly positive");
  }
  std_devs_ = variances_.array().sqrt();
  inverse_variances_ = variances_.array().inverse();
  log_normalizer_ = -0.5 * static_cast<double>(variances_.size()) * kLog2Pi -
                    0.5 * variances_.array().log().sum();
}

GaussianNoiseModel GaussianNoiseModel::isotropic(std::size_t n, double variance) {
  return GaussianNoiseModel(Vector::Constant(static_cast<Eigen::Index>(n), variance));
}

GaussianPrior::GaussianPrior(Vector mean, Vector std_dev)
    : mean_(std::move(mean)), std_dev_(std::move(std_dev)) {
  if (mean_.size() == 0 || mean_.size() != std_dev_.size()) {
    throw ConfigError("Gaussian prior mean and std_dev must have equal nonzero length");
  }
  if (!(std_dev_.array() > 0.0).all()) throw ConfigError("Gaussian prior std_dev must be > 0");
  log_normalizer_ =
      -0.5 * static_cast<double>(mean_.size()) * kLog2Pi - std_dev_.array().log().sum();
}

void GaussianPrior::draw(RandomStream& rng, VectorRef out) const {
  for (Eigen::Index k = 0; k < mean_.size(); ++k) out[k] = mean_[k] + std_dev_[k] * rng.normal();
}

double GaussianPrior::log_density(const ConstVectorRef& theta) const {
  return log_normalizer_ - 0.5 * ((theta - mean_).array() / std_dev_.array()).square().sum();
}

Box GaussianPrior::grid_bounds() const {
  // +-10 sd leaves < 2e-23 of the mass outside.
  return Box{mean_ - 10.0 * std_dev_, mean_ + 10.0 * std_dev_};
}

UniformPrior::UniformPrior(Vector lower, Vector upper, std::vector<Rectangle> obstacles)
    : box_{std::move(lower), std::move(upper)}, obstacles_(std::move(obstacles)) {
  if (box_.lower.size() == 0 || box_.lower.size() != box_.upper.size()) {
    throw ConfigError("uniform prior bounds must have equal nonzero length");
  }
  if (!(box_.upper.array() > box_.lower.array()).all()) {
    throw ConfigError("uniform prior needs upper > lower in every coordinate");
  }
  const double box_volume = (box_.upper - box_.lower).prod();
  accessible_volume_ = box_volume;
  if (!obstacles_.empty()) {
    if (box_.lower.size() != 2) throw ConfigError("obstacles require a 2D prior");
    validate_obstacles(obstacles_);
    for (const auto& r : obstacles_) {
      const double w = std::max(0.0, std::min(r.xmax, box_.upper[0]) - std::max(r.xmin, box_.lower[0]));
      const double h = std::max(0.0, std::min(r.ymax, box_.upper[1]) - std::max(r.ymin, box_.lower[1]));
      accessible_volume_ -= w * h;
    }
    if (accessible_volume_ < 0.1 * box_volume) {
      throw ConfigError(fmt::format("accessible region is {:.3g} of the domain (< 10%)",
                                    accessible_volume_ / box_volume));
    }
  }
}

bool UniformPrior::in_support(const ConstVectorRef& theta) const {
  if (!box_.contains(theta)) return false;
  for (const auto& r : obstacles_) {
    if (r.contains(theta[0], theta[1])) return false;
  }
  return true;
}

void UniformPrior::draw(RandomStream& rng, VectorRef out) const { draw_counting(rng, out); }

int UniformPrior::draw_counting(RandomStream& rng, VectorRef out) const {
  for (int attempt = 1; attempt <= kMaxAttempts; ++attempt) {
    for (Eigen::Index k = 0; k < box_.lower.size(); ++k) {
      out[k] = box_.lower[k] + (box_.upper[k] - box_.lower[k]) * rng.uniform();
    }
    if (obstacles_.empty() || in_support(out)) return attempt;
  }
  throw ConfigError(
      fmt::format("prior rejection sampling failed after {} attempts", kMaxAttempts));
}

double UniformPrior::log_density(const ConstVectorRef& theta) const {
  if (!in_support(theta)) return -std::numeric_limits<double>::infinity();
  return -std::log(accessible_volume_);
}

DesignDomain::DesignDomain(Box bounds, Predicate feasible)
    : bounds_(std::move(bounds)), feasible_(std::move(feasible)) {
  if (bounds_.lower.size() == 0 || bounds_.lower.size() != bounds_.upper.size()) {
    throw ConfigError("design bounds must have equal nonzero length");
  }
  if (!(bounds_.upper.array() >= bounds_.lower.array()).all()) {
    throw ConfigError("design bounds need upper >= lower");
  }
}

bool DesignDomain::is_feasible(const ConstVectorRef& x) const {
  return bounds_.contains(x) && satisfies_constraint(x);
}

bool DesignDomain::satisfies_constraint(const ConstVectorRef& x) const {
  return !feasible_ || feasible_(x);
}

Problem::Problem(std::string name, std::shared_ptr<const Prior> prior,
                 std::shared_ptr<const ForwardModel> forward, GaussianNoiseModel noise,
                 DesignDomain domain)
    : name_(std::move(name)),
      prior_(std::move(prior)),
      forward_(std::move(forward)),
      noise_(std::move(noise)),
      domain_(std::move(domain)) {
  if (!prior_ || !forward_) throw ConfigError("problem needs a prior and a forward model");
  if (forward_->parameter_dim() != prior_->dim()) {
    throw ConfigError("forward model and prior disagree on the parameter dimension");
  }
  if (forward_->observation_dim() != noise_.dim()) {
    throw ConfigError("forward model and noise model disagree on the observation dimension");
  }
  if (forward_->design_dim() != domain_.dim()) {
    throw ConfigError("forward model and design domain disagree on the design dimension");
  }
}

SampleBank::SampleBank(std::uint64_t master_seed, Matrix prior_samples, Matrix noise_draws)
    : master_seed_(master_seed),
      prior_samples_(std::move(prior_samples)),
      noise_draws_(std::move(noise_draws)) {
  if (prior_samples_.cols() != noise_draws_.cols()) {
    throw std::invalid_argument("sample bank streams must have equal length");
  }
}

void check_design(const Problem& problem, const DesignPoint& design) {
  require_dim(design.dim(), problem.design_dim(), "design");
}

void draw_prior_columns(const Prior& prior, RandomStream& rng, Matrix& out) {
  for (Eigen::Index j = 0; j < out.cols(); ++j) prior.draw(rng, out.col(j));
}

std::vector<ParameterSample> sample_prior(const Problem& problem, std::size_t count,
                                          std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("sample_prior needs count >= 1");
  RandomStream rng(seed, StreamTag::kPrior);
  std::vector<ParameterSample> out(count);
  for (auto& s : out) {
    s.values.resize(static_cast<Eigen::Index>(problem.parameter_dim()));
    problem.prior().draw(rng, s.values);
  }
  return out;
}

Vector forward_eval(const Problem& problem, const ParameterSample& theta,
                    const DesignPoint& design) {
  require_dim(theta.dim(), problem.parameter_dim(), "parameter");
  check_design(problem, design);
  Vector out(static_cast<Eigen::Index>(problem.observation_dim()));
  problem.forward().evaluate(theta.values, design.coords, out);
  return out;
}

Observation sample_observation(const Problem& problem, const ParameterSample& theta,
                               const DesignPoint& design, const ConstVectorRef& noise_draw) {
  require_dim(static_cast<std::size_t>(noise_draw.size()), problem.observation_dim(), "noise draw");
  Vector mean = forward_eval(problem, theta, design);
  return Observation{mean + problem.noise().std_devs().cwiseProduct(noise_draw)};
}

double gaussian_log_density(const GaussianNoiseModel& noise, const ConstVectorRef& y,
                            const ConstVectorRef& mean) {
  require_dim(static_cast<std::size_t>(y.size()), noise.dim(), "observation");
  require_dim(static_cast<std::size_t>(mean.size()), noise.dim(), "model output");
  const double quad = ((y - mean).array().square() * noise.inverse_variances().array()).sum();
  return noise.log_normalizer() - 0.5 * quad;
}

double log_likelihood(const Problem& problem, const Observation& y, const ParameterSample& theta,
                      const DesignPoint& design) {
  const Vector mean = forward_eval(problem, theta, design);
  if (!mean.allFinite()) throw EstimationError("forward model returned a non-finite value");
  return gaussian_log_density(problem.noise(), y.values, mean);
}

SampleBank build_sample_bank(const Problem& problem, std::size_t size, std::uint64_t master_seed) {
  if (size < 2) throw std::invalid_argument("sample bank needs N >= 2");
  const auto n = static_cast<Eigen::Index>(size);
  Matrix prior(static_cast<Eigen::Index>(problem.parameter_dim()), n);
  Matrix noise(static_cast<Eigen::Index>(problem.observation_dim()), n);
  RandomStream prior_rng(master_seed, StreamTag::kPrior);
  draw_prior_columns(problem.prior(), prior_rng, prior);
  RandomStream noise_rng(master_seed, StreamTag::kNoise);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < noise.rows(); ++k) noise(k, j) = noise_rng.normal();
  }
  return SampleBank(master_seed, std::move(prior), std::move(noise));
}

}  // namespace mvoed
