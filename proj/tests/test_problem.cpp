#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mvoed/benchmarks.hpp"
#include "mvoed/error.hpp"
#include "mvoed/problem.hpp"

using namespace mvoed;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index k = 0;
  for (double x : values) v[k++] = x;
  return v;
}

}  // namespace

TEST_CASE("noise and prior construction errors") {
  CHECK_THROWS_AS(GaussianNoiseModel(vec({1.0, 0.0})), ConfigError);
  CHECK_THROWS_AS(GaussianNoiseModel(vec({-1.0})), ConfigError);
  CHECK_THROWS_AS(GaussianNoiseModel{Vector()}, ConfigError);
  CHECK_THROWS_AS(GaussianPrior(vec({0.0}), vec({0.0})), ConfigError);
  CHECK_THROWS_AS(GaussianPrior(vec({0.0, 1.0}), vec({1.0})), ConfigError);
  CHECK_THROWS_AS(UniformPrior(vec({0.0}), vec({0.0})), ConfigError);
}

TEST_CASE("noise log normalizer") {
  const GaussianNoiseModel noise(vec({0.5, 2.0}));
  CHECK(noise.log_normalizer() ==
        doctest::Approx(-std::log(2.0 * std::numbers::pi) - 0.5 * std::log(1.0)));
  CHECK(noise.std_devs()[1] == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("obstacle validation") {
  CHECK_NOTHROW(validate_obstacles({{0.1, 0.2, 0.1, 0.2}, {0.3, 0.4, 0.3, 0.4}}));
  CHECK_THROWS_AS(validate_obstacles({{0.2, 0.1, 0.1, 0.2}}), ConfigError);
  CHECK_THROWS_AS(validate_obstacles({{0.9, 1.1, 0.1, 0.2}}), ConfigError);
  CHECK_THROWS_AS(validate_obstacles({{0.1, 0.3, 0.1, 0.3}, {0.2, 0.4, 0.2, 0.4}}), ConfigError);
  // Touching edges do not overlap.
  CHECK_NOTHROW(validate_obstacles({{0.1, 0.3, 0.1, 0.3}, {0.3, 0.4, 0.1, 0.3}}));
}

TEST_CASE("uniform prior rejects layouts leaving under 10 percent accessible") {
  const Vector lo = vec({0.0, 0.0}), hi = vec({1.0, 1.0});
  CHECK_THROWS_AS(UniformPrior(lo, hi, {{0.0, 1.0, 0.0, 0.95}}), ConfigError);
  UniformPrior ok(lo, hi, {{0.0, 1.0, 0.0, 0.85}});
  CHECK(ok.accessible_volume() == doctest::Approx(0.15));
}

TEST_CASE("masked uniform prior never draws inside an obstacle") {
  const Rectangle r{0.4, 0.6, 0.4, 0.6};
  UniformPrior prior(vec({0.0, 0.0}), vec({1.0, 1.0}), {r});
  RandomStream rng(5);
  Vector theta(2);
  long proposals = 0;
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) {
    proposals += prior.draw_counting(rng, theta);
    REQUIRE_FALSE(r.contains(theta[0], theta[1]));
  }
  CHECK(static_cast<double>(draws) / proposals == doctest::Approx(0.96).epsilon(0.01 / 0.96));
  CHECK(prior.log_density(vec({0.5, 0.5})) == -std::numeric_limits<double>::infinity());
  CHECK(prior.log_density(vec({0.1, 0.1})) == doctest::Approx(-std::log(0.96)));
}

TEST_CASE("sample bank depends only on seed and size, and prefixes agree") {
  const Problem p = make_nonlinear_problem({2, 1e-4});
  const SampleBank a = build_sample_bank(p, 500, 77);
  const SampleBank b = build_sample_bank(p, 500, 77);
  const SampleBank c = build_sample_bank(p, 200, 77);
  CHECK(a.prior_samples() == b.prior_samples());
  CHECK(a.noise_draws() == b.noise_draws());
  CHECK(a.prior_samples().leftCols(200) == c.prior_samples());
  CHECK(a.noise_draws().leftCols(200) == c.noise_draws());
  const SampleBank d = build_sample_bank(p, 500, 78);
  CHECK(a.prior_samples() != d.prior_samples());
  CHECK_THROWS_AS(build_sample_bank(p, 1, 0), std::invalid_argument);
}

TEST_CASE("gaussian likelihood integrates to one over y") {
  const Problem p = make_linear_gaussian_problem();
  const ParameterSample theta{vec({0.7})};
  const DesignPoint design{vec({2.0})};
  const double centre = 1.4;
  const int n = 20001;
  const double lo = centre - 12.0, hi = centre + 12.0, h = (hi - lo) / (n - 1);
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    const Observation y{vec({lo + k * h})};
    const double w = (k == 0 || k == n - 1) ? 0.5 : 1.0;
    total += w * std::exp(log_likelihood(p, y, theta, design));
  }
  CHECK(total * h == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("observation sampling adds scaled noise") {
  const Problem p = make_nonlinear_problem({1, 1e-4});
  const ParameterSample theta{vec({0.5})};
  const DesignPoint design{vec({0.3})};
  const Observation y = sample_observation(p, theta, design, vec({2.0}));
  CHECK(y.values[0] == doctest::Approx(nonlinear_forward(0.5, 0.3) + 0.02).epsilon(1e-14));
}

TEST_CASE("design dimension is checked") {
  const Problem p = make_nonlinear_problem({2, 1e-4});
  CHECK_THROWS_AS(check_design(p, DesignPoint{vec({0.1})}), std::invalid_argument);
  CHECK_NOTHROW(check_design(p, DesignPoint{vec({0.1, 0.2})}));
  CHECK(p.domain().is_feasible(vec({0.1, 0.2})));
  CHECK_FALSE(p.domain().is_feasible(vec({1.1, 0.2})));
}
