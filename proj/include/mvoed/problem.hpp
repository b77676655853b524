#pragma once

// Problem abstraction for Bayesian experimental design: a prior over the
// unknown parameters, a forward model G(theta, xi), additive Gaussian
// observation noise, and a box-bounded design domain. Also holds the seeded
// SampleBank shared by every estimator.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mvoed/rng.hpp"

namespace mvoed {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorRef = Eigen::Ref<Vector>;
using ConstVectorRef = Eigen::Ref<const Vector>;

struct DesignPoint {
  Vector coords;
  std::size_t dim() const { return static_cast<std::size_t>(coords.size()); }
};

struct ParameterSample {
  Vector values;
  std::size_t dim() const { return static_cast<std::size_t>(values.size()); }
};

struct Observation {
  Vector values;
  std::size_t dim() const { return static_cast<std::size_t>(values.size()); }
};

/// Axis-aligned rectangle in the unit square, [xmin, xmax] x [ymin, ymax].
struct Rectangle {
  double xmin = 0.0;
  double xmax = 0.0;
  double ymin = 0.0;
  double ymax = 0.0;

  bool contains(double x, double y) const {
    return x >= xmin && x <= xmax && y >= ymin && y <= ymax;
  }
  double area() const { return (xmax - xmin) * (ymax - ymin); }
  bool overlaps(const Rectangle& other) const {
    return xmin < other.xmax && other.xmin < xmax && ymin < other.ymax && other.ymin < ymax;
  }
};

/// Checks that rectangles are well formed, inside the unit square and
/// pairwise disjoint. Throws ConfigError otherwise.
void validate_obstacles(const std::vector<Rectangle>& obstacles);

struct Box {
  Vector lower;
  Vector upper;

  std::size_t dim() const { return static_cast<std::size_t>(lower.size()); }
  bool contains(const ConstVectorRef& x) const;
};

/// Diagonal Gaussian noise N(0, diag(variances)).
class GaussianNoiseModel {
 public:
  explicit GaussianNoiseModel(Vector variances);
  static GaussianNoiseModel isotropic(std::size_t n, double variance);

  std::size_t dim() const { return static_cast<std::size_t>(variances_.size()); }
  const Vector& variances() const { return variances_; }
  const Vector& std_devs() const { return std_devs_; }
  const Vector& inverse_variances() const { return inverse_variances_; }
  /// -(n/2) log(2 pi) - (1/2) log|Gamma|
  double log_normalizer() const { return log_normalizer_; }

 private:
  Vector variances_;
  Vector std_devs_;
  Vector inverse_variances_;
  double log_normalizer_ = 0.0;
};

class Prior {
 public:
  virtual ~Prior() = default;
  virtual std::size_t dim() const = 0;
  /// Writes one draw into `out`. May throw ConfigError when rejection
  /// sampling cannot find a point in the support.
  virtual void draw(RandomStream& rng, VectorRef out) const = 0;
  virtual double log_density(const ConstVectorRef& theta) const = 0;
  virtual bool in_support(const ConstVectorRef& theta) const = 0;
  /// Bounded box used by grid quadrature. For unbounded priors this is a
  /// truncation wide enough that the neglected mass is negligible.
  virtual Box grid_bounds() const = 0;
};

/// Independent Gaussian components N(mean_k, sd_k^2).
class GaussianPrior final : public Prior {
 public:
  GaussianPrior(Vector mean, Vector std_dev);

  std::size_t dim() const override { return static_cast<std::size_t>(mean_.size()); }
  void draw(RandomStream& rng, VectorRef out) const override;
  double log_density(const ConstVectorRef& theta) const override;
  bool in_support(const ConstVectorRef&) const override { return true; }
  Box grid_bounds() const override;

  const Vector& mean() const { return mean_; }
  const Vector& std_dev() const { return std_dev_; }

 private:
  Vector mean_;
  Vector std_dev_;
  double log_normalizer_ = 0.0;
};

/// Uniform on a box, optionally minus rectangular obstacles (2D only).
/// The density is 1/(accessible volume) on the support.
class UniformPrior final : public Prior {
 public:
  static constexpr int kMaxAttempts = 10000;

  UniformPrior(Vector lower, Vector upper, std::vector<Rectangle> obstacles = {});

  std::size_t dim() const override { return static_cast<std::size_t>(box_.lower.size()); }
  void draw(RandomStream& rng, VectorRef out) const override;
  /// Same as draw() but returns the number of proposals it took.
  int draw_counting(RandomStream& rng, VectorRef out) const;
  double log_density(const ConstVectorRef& theta) const override;
  bool in_support(const ConstVectorRef& theta) const override;
  Box grid_bounds() const override { return box_; }

  double accessible_volume() const { return accessible_volume_; }
  const std::vector<Rectangle>& obstacles() const { return obstacles_; }

 private:
  Box box_;
  std::vector<Rectangle> obstacles_;
  double accessible_volume_ = 0.0;
};

class ForwardModel {
 public:
  virtual ~ForwardModel() = default;
  virtual std::size_t parameter_dim() const = 0;
  virtual std::size_t design_dim() const = 0;
  virtual std::size_t observation_dim() const = 0;
  /// out = G(theta, design). Must be a pure function of its inputs.
  virtual void evaluate(const ConstVectorRef& theta, const ConstVectorRef& design,
                        VectorRef out) const = 0;
};

/// Design box plus an optional feasibility predicate (for example "sensor
/// outside every obstacle").
class DesignDomain {
 public:
  using Predicate = std::function<bool(const ConstVectorRef&)>;

  explicit DesignDomain(Box bounds, Predicate feasible = {});

  const Box& bounds() const { return bounds_; }
  std::size_t dim() const { return bounds_.dim(); }
  bool has_constraint() const { return static_cast<bool>(feasible_); }
  /// In the box and satisfying the predicate.
  bool is_feasible(const ConstVectorRef& x) const;
  /// Predicate only (box not checked).
  bool satisfies_constraint(const ConstVectorRef& x) const;

 private:
  Box bounds_;
  Predicate feasible_;
};

class Problem {
 public:
  Problem(std::string name, std::shared_ptr<const Prior> prior,
          std::shared_ptr<const ForwardModel> forward, GaussianNoiseModel noise,
          DesignDomain domain);

  const std::string& name() const { return name_; }
  const Prior& prior() const { return *prior_; }
  const ForwardModel& forward() const { return *forward_; }
  const GaussianNoiseModel& noise() const { return noise_; }
  const DesignDomain& domain() const { return domain_; }

  std::size_t design_dim() const { return domain_.dim(); }
  std::size_t parameter_dim() const { return prior_->dim(); }
  std::size_t observation_dim() const { return noise_.dim(); }

  std::shared_ptr<const Prior> prior_ptr() const { return prior_; }
  std::shared_ptr<const ForwardModel> forward_ptr() const { return forward_; }

 private:
  std::string name_;
  std::shared_ptr<const Prior> prior_;
  std::shared_ptr<const ForwardModel> forward_;
  GaussianNoiseModel noise_;
  DesignDomain domain_;
};

/// Seeded store of prior draws and standard-normal noise draws. Depends
/// only on (master_seed, size); the two streams are independent.
class SampleBank {
 public:
  SampleBank(std::uint64_t master_seed, Matrix prior_samples, Matrix noise_draws);

  std::uint64_t master_seed() const { return master_seed_; }
  std::size_t size() const { return static_cast<std::size_t>(prior_samples_.cols()); }
  /// p x N, one column per draw.
  const Matrix& prior_samples() const { return prior_samples_; }
  /// n x N, one column per draw.
  const Matrix& noise_draws() const { return noise_draws_; }
  auto parameter(std::size_t i) const { return prior_samples_.col(static_cast<Eigen::Index>(i)); }
  auto noise(std::size_t i) const { return noise_draws_.col(static_cast<Eigen::Index>(i)); }

  /// Stream for inner draws that belong to outer sample `index`. Derived
  /// from the master seed, so it is part of the bank under CRS.
  RandomStream inner_stream(StreamTag tag, std::size_t index) const {
    return RandomStream(master_seed_, tag, index);
  }

 private:
  std::uint64_t master_seed_;
  Matrix prior_samples_;
  Matrix noise_draws_;
};

std::vector<ParameterSample> sample_prior(const Problem& problem, std::size_t count,
                                          std::uint64_t seed);

/// Fills the columns of `out` (p x count) with draws from `rng`.
void draw_prior_columns(const Prior& prior, RandomStream& rng, Matrix& out);

Vector forward_eval(const Problem& problem, const ParameterSample& theta,
                    const DesignPoint& design);

/// G(theta, xi) + Gamma^{1/2} * noise_draw
Observation sample_observation(const Problem& problem, const ParameterSample& theta,
                               const DesignPoint& design, const ConstVectorRef& noise_draw);

/// log N(y; mean, Gamma) including the normalizing constant.
double gaussian_log_density(const GaussianNoiseModel& noise, const ConstVectorRef& y,
                            const ConstVectorRef& mean);

double log_likelihood(const Problem& problem, const Observation& y, const ParameterSample& theta,
                      const DesignPoint& design);

SampleBank build_sample_bank(const Problem& problem, std::size_t size, std::uint64_t master_seed);

/// Throws std::invalid_argument unless the design has the problem's dimension.
void check_design(const Problem& problem, const DesignPoint& design);

}  // namespace mvoed
