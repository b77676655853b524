#pragma once

// Benchmark problems with known structure:
//   lingauss-1d   Y = Theta * xi + E,  Theta ~ N(0, 3^2), E ~ N(0, 1), xi in [0, 3]
//   nonlinear-1d  Y = Theta^3 xi^2 + Theta exp(-1.3 |0.2 - xi|) + E,
//                 Theta ~ U[0, 1], E ~ N(0, 1e-4), xi in [0, 1]
//   nonlinear-2d  the same experiment run twice, one design coordinate each
//   constant-1d   G == 0; carries no information about Theta (test model)

#include <cstddef>

#include "mvoed/problem.hpp"

namespace mvoed {

struct LinearGaussianSpec {
  double prior_mean = 0.0;
  double prior_var = 9.0;
  double noise_var = 1.0;
  double design_lower = 0.0;
  double design_upper = 3.0;
};

struct NonlinearSpec {
  std::size_t design_dim = 1;  // 1 or 2
  double noise_var = 1e-4;
};

/// G(theta, xi) = theta * xi (scalar).
class LinearModel final : public ForwardModel {
 public:
  std::size_t parameter_dim() const override { return 1; }
  std::size_t design_dim() const override { return 1; }
  std::size_t observation_dim() const override { return 1; }
  void evaluate(const ConstVectorRef& theta, const ConstVectorRef& design,
                VectorRef out) const override {
    out[0] = theta[0] * design[0];
  }
};

/// Componentwise nonlinear model: one observation per design coordinate.
class NonlinearModel final : public ForwardModel {
 public:
  explicit NonlinearModel(std::size_t design_dim);
  std::size_t parameter_dim() const override { return 1; }
  std::size_t design_dim() const override { return design_dim_; }
  std::size_t observation_dim() const override { return design_dim_; }
  void evaluate(const ConstVectorRef& theta, const ConstVectorRef& design,
                VectorRef out) const override;

 private:
  std::size_t design_dim_;
};

/// G(theta, xi) = value for every input.
class ConstantModel final : public ForwardModel {
 public:
  ConstantModel(std::size_t parameter_dim, std::size_t design_dim, std::size_t observation_dim,
                double value = 0.0)
      : p_(parameter_dim), d_(design_dim), n_(observation_dim), value_(value) {}
  std::size_t parameter_dim() const override { return p_; }
  std::size_t design_dim() const override { return d_; }
  std::size_t observation_dim() const override { return n_; }
  void evaluate(const ConstVectorRef&, const ConstVectorRef&, VectorRef out) const override {
    out.setConstant(value_);
  }

 private:
  std::size_t p_, d_, n_;
  double value_;
};

double nonlinear_forward(double theta, double xi);

/// Closed-form expected information gain 1/2 ln(1 + s0^2 xi^2 / se^2).
double lg_exact_expected_utility(double xi, const LinearGaussianSpec& spec = {});

/// Closed-form Var_Y[u_KL(xi, Y)]. u is quadratic in y, u = a + c1 (y - xi m0)^2
/// with c1 = s0^2 xi^2 / (2 sy^4), sy^2 = s0^2 xi^2 + se^2, so
/// V = 2 c1^2 sy^4 = (1/2) (s0^2 xi^2 / sy^2)^2.
double lg_exact_utility_variance(double xi, const LinearGaussianSpec& spec = {});

/// Conjugate KL(posterior || prior) for one observation y.
double lg_conjugate_kl(double y, double xi, const LinearGaussianSpec& spec = {});

/// Variance of the prior predictive p(y | xi) = N(xi m0, s0^2 xi^2 + se^2).
double lg_predictive_variance(double xi, const LinearGaussianSpec& spec = {});

Problem make_linear_gaussian_problem(const LinearGaussianSpec& spec = {});
Problem make_nonlinear_problem(const NonlinearSpec& spec = {});
/// Constant model with prior N(0, 1), unit noise and xi in [0, 1].
Problem make_constant_problem(double value = 0.0);

}  // namespace mvoed
