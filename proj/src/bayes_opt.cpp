#include "mvoed/bayes_opt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "mvoed/error.hpp"

namespace mvoed {
namespace {

constexpr int kMaxRedraws = 10000;

double score(const GpSurrogate& gp, const ConstVectorRef& x, const ProposalOptions& options,
             double incumbent) {
  return options.acquisition == Acquisition::kUcb ? acquisition_ucb(gp, x, options.kappa)
                                                  : acquisition_ei(gp, x, incumbent);
}

Vector uniform_point(const Box& box, RandomStream& rng) {
  Vector x(box.lower.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    x[k] = box.lower[k] + (box.upper[k] - box.lower[k]) * rng.uniform();
  }
  return x;
}

Vector feasible_uniform_point(const DesignDomain& domain, RandomStream& rng) {
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    Vector x = uniform_point(domain.bounds(), rng);
    if (domain.is_feasible(x)) return x;
  }
  throw ConfigError(fmt::format("no feasible design found in {} uniform draws", kMaxRedraws));
}

}  // namespace

double acquisition_ucb(const GpSurrogate& gp, const ConstVectorRef& x, double kappa) {
  const GpPrediction p = gp.predict(x);
  return p.mean + kappa * p.stddev();
}

double acquisition_ei(const GpSurrogate& gp, const ConstVectorRef& x, double best) {
  const GpPrediction p = gp.predict(x);
  const double sd = p.stddev();
  const double gain = p.mean - best;
  if (sd <= 0.0) return std::max(gain, 0.0);
  const double z = gain / sd;
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  return gain * cdf + sd * pdf;
}

DesignPoint propose_next(const GpSurrogate& gp, const DesignDomain& domain, std::uint64_t seed,
                         const ProposalOptions& options) {
  if (gp.dim() != domain.dim()) throw std::invalid_argument("GP and domain dimensions differ");
  if (options.candidates == 0 || options.local_starts == 0) {
    throw ConfigError("proposal needs at least one candidate and one local start");
  }
  double incumbent = -std::numeric_limits<double>::infinity();
  if (options.incumbent) {
    incumbent = *options.incumbent;
  } else {
    for (const auto& p : gp.pairs()) incumbent = std::max(incumbent, p.value);
  }

  RandomStream rng(seed, StreamTag::kAcquisition);
  const Box& box = domain.bounds();
  std::vector<Vector> points;
  std::vector<double> values;
  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < options.candidates; ++c) {
    Vector x = uniform_point(box, rng);
    if (!domain.is_feasible(x)) continue;
    values.push_back(score(gp, x, options, incumbent));
    points.push_back(std::move(x));
    order.push_back(order.size());
  }
  if (points.empty()) throw ConfigError("every acquisition candidate is infeasible");

  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  order.resize(std::min(order.size(), options.local_starts));
  // Ascend in candidate-index order so that strict improvement keeps the lowest index on ties.
  std::sort(order.begin(), order.end());

  Vector best_x;
  double best_v = -std::numeric_limits<double>::infinity();
  for (std::size_t idx : order) {
    Vector x = points[idx];
    double v = values[idx];
    double step = 0.05;
    for (int pass = 0; pass < 200 && step >= 1e-4; ++pass) {
      bool moved = false;
      for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double width = box.upper[k] - box.lower[k];
        for (double sign : {1.0, -1.0}) {
          Vector y = x;
          y[k] = std::clamp(x[k] + sign * step * width, box.lower[k], box.upper[k]);
          if (y[k] == x[k] || !domain.is_feasible(y)) continue;
          const double vy = score(gp, y, options, incumbent);
          if (vy > v) {
            x = std::move(y);
            v = vy;
            moved = true;
            break;
          }
        }
      }
      if (!moved) step *= 0.5;
    }
    if (v > best_v) {
      best_v = v;
      best_x = std::move(x);
    }
  }
  return DesignPoint{std::move(best_x)};
}

std::vector<DesignPoint> initial_designs(const DesignDomain& domain, std::size_t n,
                                         std::uint64_t seed) {
  if (n == 0) return {};
  RandomStream rng(seed, StreamTag::kInitialDesign);
  const Box& box = domain.bounds();
  const auto d = box.lower.size();
  // One random permutation of the strata per dimension.
  std::vector<std::vector<std::size_t>> strata(static_cast<std::size_t>(d));
  for (auto& perm : strata) {
    perm.resize(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i + 1));
      std::swap(perm[i], perm[std::min(j, i)]);
    }
  }
  std::vector<DesignPoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vector x(d);
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
      for (Eigen::Index k = 0; k < d; ++k) {
        const double cell = (static_cast<double>(strata[static_cast<std::size_t>(k)][i]) +
                             rng.uniform()) / static_cast<double>(n);
        x[k] = box.lower[k] + (box.upper[k] - box.lower[k]) * cell;
      }
      ok = domain.is_feasible(x);
    }
    if (!ok) x = feasible_uniform_point(domain, rng);
    out.push_back(DesignPoint{std::move(x)});
  }
  return out;
}

BoResult run_bo(const Problem& problem, const BoConfig& config) {
  if (config.budget < 1) throw ConfigError("BO budget must be >= 1");
  if (config.n_init < 2) throw ConfigError("BO needs at least 2 initial designs");
  config.estimator.validate();

  BoResult result;
  BoState& state = result.state;
  state.budget = config.budget;
  state.n_init = config.n_init;
  state.kappa = config.proposal.kappa;
  state.best_value = -std::numeric_limits<double>::infinity();

  const DesignDomain& domain = problem.domain();
  std::size_t evaluation = 0;
  const auto evaluate = [&](const DesignPoint& design) {
    const std::size_t index = evaluation++;
    ++state.iterations;
    EstimateReport report;
    try {
      report = estimate_objective(problem, design, config.estimator, index);
    } catch (const EstimationError&) {
      ++state.skipped;
      return;
    }
    state.evaluated.push_back(TrainingPair{design.coords, report.j_hat});
    if (report.j_hat > state.best_value) {
      state.best_value = report.j_hat;
      state.best_design = design;
    }
    result.trace.push_back(TraceEntry{index, std::move(report), state.best_value});
  };

  for (const DesignPoint& x : initial_designs(domain, config.n_init, config.seed)) evaluate(x);

  for (std::size_t t = 0; t < config.budget; ++t) {
    const std::uint64_t proposal_seed = derive_seed(config.seed, StreamTag::kAcquisition, t);
    DesignPoint next;
    bool proposed = false;
    if (state.evaluated.size() >= 2) {
      try {
        const GpSurrogate gp = gp_fit(state.evaluated, domain.bounds(), config.hyper);
        next = propose_next(gp, domain, proposal_seed, config.proposal);
        proposed = true;
      } catch (const EstimationError&) {
        proposed = false;
      }
    }
    if (!proposed) {
      RandomStream rng(proposal_seed, StreamTag::kAcquisition);
      next = DesignPoint{feasible_uniform_point(domain, rng)};
    }
    evaluate(next);
  }
  if (state.evaluated.empty()) throw EstimationError("every BO design evaluation failed");
  return result;
}

}  // namespace mvoed
