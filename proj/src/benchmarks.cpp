#include "mvoed/benchmarks.hpp"

#include <cmath>

#include "mvoed/error.hpp"

namespace mvoed {

NonlinearModel::NonlinearModel(std::size_t design_dim) : design_dim_(design_dim) {
  if (design_dim_ != 1 && design_dim_ != 2) throw ConfigError("nonlinear model needs d in {1, 2}");
}

void NonlinearModel::evaluate(const ConstVectorRef& theta, const ConstVectorRef& design,
                              VectorRef out) const {
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(design_dim_); ++k) {
    out[k] = nonlinear_forward(theta[0], design[k]);
  }
}

double nonlinear_forward(double theta, double xi) {
  return theta * theta * theta * xi * xi + theta * std::exp(-1.3 * std::abs(0.2 - xi));
}

double lg_predictive_variance(double xi, const LinearGaussianSpec& spec) {
  return spec.prior_var * xi * xi + spec.noise_var;
}

double lg_exact_expected_utility(double xi, const LinearGaussianSpec& spec) {
  return 0.5 * std::log1p(spec.prior_var * xi * xi / spec.noise_var);
}

double lg_exact_utility_variance(double xi, const LinearGaussianSpec& spec) {
  const double signal = spec.prior_var * xi * xi;
  const double ratio = signal / lg_predictive_variance(xi, spec);
  return 0.5 * ratio * ratio;
}

double lg_conjugate_kl(double y, double xi, const LinearGaussianSpec& spec) {
  const double post_var = 1.0 / (1.0 / spec.prior_var + xi * xi / spec.noise_var);
  const double post_mean =
      post_var * (spec.prior_mean / spec.prior_var + xi * y / spec.noise_var);
  const double shift = post_mean - spec.prior_mean;
  return 0.5 * ((post_var + shift * shift) / spec.prior_var - 1.0 -
                std::log(post_var / spec.prior_var));
}

Problem make_linear_gaussian_problem(const LinearGaussianSpec& spec) {
  if (!(spec.prior_var > 0.0) || !(spec.noise_var > 0.0)) {
    throw ConfigError("linear-Gaussian variances must be > 0");
  }
  auto prior = std::make_shared<GaussianPrior>(Vector::Constant(1, spec.prior_mean),
                                               Vector::Constant(1, std::sqrt(spec.prior_var)));
  DesignDomain domain(Box{Vector::Constant(1, spec.design_lower),
                          Vector::Constant(1, spec.design_upper)});
  return Problem("lingauss-1d", std::move(prior), std::make_shared<LinearModel>(),
                 GaussianNoiseModel::isotropic(1, spec.noise_var), std::move(domain));
}

Problem make_nonlinear_problem(const NonlinearSpec& spec) {
  const auto d = static_cast<Eigen::Index>(spec.design_dim);
  auto model = std::make_shared<NonlinearModel>(spec.design_dim);
  auto prior = std::make_shared<UniformPrior>(Vector::Zero(1), Vector::Ones(1));
  DesignDomain domain(Box{Vector::Zero(d), Vector::Ones(d)});
  return Problem(spec.design_dim == 1 ? "nonlinear-1d" : "nonlinear-2d", std::move(prior),
                 std::move(model), GaussianNoiseModel::isotropic(spec.design_dim, spec.noise_var),
                 std::move(domain));
}

Problem make_constant_problem(double value) {
  auto prior = std::make_shared<GaussianPrior>(Vector::Zero(1), Vector::Ones(1));
  DesignDomain domain(Box{Vector::Zero(1), Vector::Ones(1)});
  return Problem("constant-1d", std::move(prior), std::make_shared<ConstantModel>(1, 1, 1, value),
                 GaussianNoiseModel::isotropic(1, 1.0), std::move(domain));
}

}  // namespace mvoed
