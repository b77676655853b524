#pragma once

// Gaussian-process Bayesian optimization of the mean-variance objective:
// seeded Latin-hypercube initial designs, then repeated GP fit, acquisition
// maximization and one new objective evaluation per iteration.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "mvoed/estimators.hpp"
#include "mvoed/gp.hpp"
#include "mvoed/problem.hpp"

namespace mvoed {

enum class Acquisition { kUcb, kExpectedImprovement };

/// mean(x) + kappa * stddev(x)
double acquisition_ucb(const GpSurrogate& gp, const ConstVectorRef& x, double kappa = 2.0);
/// E[max(f(x) - best, 0)] under the GP posterior.
double acquisition_ei(const GpSurrogate& gp, const ConstVectorRef& x, double best);

struct ProposalOptions {
  Acquisition acquisition = Acquisition::kUcb;
  double kappa = 2.0;
  std::size_t candidates = 1024;
  std::size_t local_starts = 8;
  /// Incumbent for expected improvement; defaults to the best training target.
  std::optional<double> incumbent;
};

/// Maximizes the acquisition over the feasible part of `domain`: uniform
/// seeded candidates, then coordinate ascent from the best few. Ties go to
/// the lowest candidate index. Throws ConfigError if no candidate is feasible.
DesignPoint propose_next(const GpSurrogate& gp, const DesignDomain& domain, std::uint64_t seed,
                         const ProposalOptions& options = {});

struct BoConfig {
  std::size_t n_init = 5;   // n0
  std::size_t budget = 25;  // T, acquisition-driven evaluations after the initial ones
  EstimatorConfig estimator;  // lambda lives here
  ProposalOptions proposal;
  HyperConfig hyper;
  std::uint64_t seed = 0;
};

struct TraceEntry {
  std::size_t iteration = 0;  // evaluation order, counting skipped designs
  EstimateReport report;
  double best_so_far = 0.0;
};

struct BoState {
  std::vector<TrainingPair> evaluated;
  std::size_t iterations = 0;
  std::size_t skipped = 0;
  std::size_t budget = 0;
  std::size_t n_init = 0;
  double best_value = 0.0;
  DesignPoint best_design;
  double kappa = 2.0;
};

struct BoResult {
  BoState state;
  std::vector<TraceEntry> trace;
};

/// n seeded Latin-hypercube points in `domain`. Points violating the
/// domain constraint are redrawn uniformly within their stratum.
std::vector<DesignPoint> initial_designs(const DesignDomain& domain, std::size_t n,
                                         std::uint64_t seed);

BoResult run_bo(const Problem& problem, const BoConfig& config);

}  // namespace mvoed
