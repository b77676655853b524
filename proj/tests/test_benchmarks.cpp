#include <cmath>

#include "doctest.h"
#include "mvoed/benchmarks.hpp"
#include "mvoed/rng.hpp"

using namespace mvoed;

TEST_CASE("linear-Gaussian closed forms") {
  CHECK(lg_exact_expected_utility(3.0) == doctest::Approx(0.5 * std::log(82.0)).epsilon(1e-14));
  CHECK(lg_exact_expected_utility(0.0) == 0.0);
  const double r = 81.0 / 82.0;
  CHECK(lg_exact_utility_variance(3.0) == doctest::Approx(0.5 * r * r).epsilon(1e-14));
  CHECK(lg_exact_utility_variance(0.0) == 0.0);
  CHECK(lg_predictive_variance(3.0) == doctest::Approx(82.0));
}

TEST_CASE("conjugate KL averages to the closed-form utility and variance") {
  // Independent oracle: plain Monte Carlo over the prior predictive.
  const double xi = 3.0;
  const double sy = std::sqrt(lg_predictive_variance(xi));
  RandomStream rng(99);
  const int n = 2000000;
  double s = 0, s2 = 0;
  for (int k = 0; k < n; ++k) {
    const double u = lg_conjugate_kl(sy * rng.normal(), xi);
    s += u;
    s2 += u * u;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  CHECK(mean == doctest::Approx(lg_exact_expected_utility(xi)).epsilon(2e-3));
  CHECK(var == doctest::Approx(lg_exact_utility_variance(xi)).epsilon(1e-2));
}

TEST_CASE("nonlinear forward model values") {
  CHECK(nonlinear_forward(0.0, 0.5) == 0.0);
  CHECK(nonlinear_forward(1.0, 0.2) == doctest::Approx(0.04 + 1.0));
  CHECK(nonlinear_forward(0.5, 1.0) ==
        doctest::Approx(0.125 + 0.5 * std::exp(-1.3 * 0.8)).epsilon(1e-14));
  NonlinearModel model(2);
  Vector theta(1), design(2), out(2);
  theta << 0.7;
  design << 0.2, 0.9;
  model.evaluate(theta, design, out);
  CHECK(out[0] == nonlinear_forward(0.7, 0.2));
  CHECK(out[1] == nonlinear_forward(0.7, 0.9));
}

TEST_CASE("benchmark problems have the declared shapes") {
  const Problem lg = make_linear_gaussian_problem();
  CHECK(lg.design_dim() == 1);
  CHECK(lg.domain().bounds().upper[0] == 3.0);
  const Problem nl = make_nonlinear_problem({2, 1e-4});
  CHECK(nl.design_dim() == 2);
  CHECK(nl.observation_dim() == 2);
  CHECK(nl.noise().variances()[0] == 1e-4);
  const Problem c = make_constant_problem();
  CHECK(c.parameter_dim() == 1);
}
