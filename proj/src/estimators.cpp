#include "mvoed/estimators.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "mvoed/error.hpp"

namespace mvoed {
namespace {

using Array = Eigen::ArrayXd;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogWeightFloor = -600.0;

// Forward outputs for the columns of `thetas`, stored transposed (count x n)
// so that each observation component is contiguous over samples.
Matrix forward_outputs(const Problem& problem, const DesignPoint& design, const Matrix& thetas,
                       Eigen::Index count) {
  const auto n = static_cast<Eigen::Index>(problem.observation_dim());
  Matrix outputs_t(count, n);
  Vector out(n);
  for (Eigen::Index j = 0; j < count; ++j) {
    problem.forward().evaluate(thetas.col(j), design.coords, out);
    if (!out.allFinite()) {
      throw EstimationError(
          fmt::format("forward model returned a non-finite value for sample {}", j));
    }
    outputs_t.row(j) = out.transpose();
  }
  return outputs_t;
}

// log p(y | theta_j) for every row j of `outputs_t`.
void log_likelihoods(const GaussianNoiseModel& noise, const ConstVectorRef& y,
                     const Matrix& outputs_t, Array& out) {
  out.setZero(outputs_t.rows());
  const Vector& inv_var = noise.inverse_variances();
  for (Eigen::Index k = 0; k < outputs_t.cols(); ++k) {
    out += inv_var[k] * (outputs_t.col(k).array() - y[k]).square();
  }
  out = noise.log_normalizer() - 0.5 * out;
}

// Max-shifted sums over one inner sample set: shift = max l,
// sum_w = sum exp(l - shift), sum_wl = sum exp(l - shift) * l.
struct ShiftedSums {
  double shift = kNegInf;
  double sum_w = 0.0;
  double sum_wl = 0.0;
};

ShiftedSums shifted_sums(const Array& logp, Array& scratch, bool with_weighted_log) {
  ShiftedSums s;
  s.shift = logp.maxCoeff();
  if (!std::isfinite(s.shift)) return s;
  // Weights below exp(-600) relative to the largest are far below double
  // resolution of the sum; clamping them keeps exp() out of subnormal range.
  scratch = (logp - s.shift).max(kLogWeightFloor).exp();
  s.sum_w = scratch.sum();
  if (with_weighted_log) s.sum_wl = (scratch * logp).sum();
  return s;
}

double mean(const Vector& v) { return v.size() == 0 ? 0.0 : v.sum() / static_cast<double>(v.size()); }

double std_error(const Array& values) {
  const auto n = static_cast<double>(values.size());
  if (values.size() < 2) return 0.0;
  const double m = values.sum() / n;
  return std::sqrt((values - m).square().sum() / (n - 1.0) / n);
}

}  // namespace

EstimatorConfig EstimatorConfig::reusing(std::size_t n, double lambda,
                                         std::optional<std::uint64_t> crs_seed) {
  EstimatorConfig c;
  c.n_outer = c.m1 = c.m2 = n;
  c.reuse = true;
  c.lambda = lambda;
  c.crs_seed = crs_seed;
  return c;
}

void EstimatorConfig::validate() const {
  if (n_outer < 2 || m1 < 2 || m2 < 2) throw ConfigError("N, M1 and M2 must all be >= 2");
  if (reuse && (n_outer != m1 || n_outer != m2)) {
    throw ConfigError("sample reuse requires N = M1 = M2");
  }
  if (!(max_dropped_fraction >= 0.0 && max_dropped_fraction <= 1.0)) {
    throw ConfigError("max_dropped_fraction must lie in [0, 1]");
  }
  if (!std::isfinite(lambda)) throw ConfigError("lambda must be finite");
}

double log_mean_exp(const Eigen::Ref<const Eigen::ArrayXd>& values) {
  if (values.size() == 0) throw std::invalid_argument("log_mean_exp of an empty set");
  const double shift = values.maxCoeff();
  if (!std::isfinite(shift)) return shift;
  return shift + std::log((values - shift).exp().sum()) -
         std::log(static_cast<double>(values.size()));
}

double estimate_marginal_log_likelihood(const Problem& problem, const Observation& y,
                                        const std::vector<ParameterSample>& inner,
                                        const DesignPoint& design) {
  if (inner.empty()) throw std::invalid_argument("marginal likelihood needs inner samples");
  Array logp(static_cast<Eigen::Index>(inner.size()));
  for (std::size_t j = 0; j < inner.size(); ++j) {
    logp[static_cast<Eigen::Index>(j)] = log_likelihood(problem, y, inner[j], design);
  }
  return log_mean_exp(logp);
}

OuterTerms compute_outer_terms(const Problem& problem, const DesignPoint& design,
                               const SampleBank& bank, const EstimatorConfig& config) {
  config.validate();
  check_design(problem, design);
  if (bank.size() < config.n_outer) {
    throw std::invalid_argument(
        fmt::format("bank holds {} samples, N = {} requested", bank.size(), config.n_outer));
  }
  const auto n_outer = static_cast<Eigen::Index>(config.n_outer);
  const auto obs_dim = static_cast<Eigen::Index>(problem.observation_dim());
  const GaussianNoiseModel& noise = problem.noise();

  OuterTerms terms;
  terms.requested = config.n_outer;
  Vector log_lik(n_outer), log_marg(n_outer), ratio(n_outer);
  Eigen::Index kept = 0;

  const Matrix outer_t = forward_outputs(problem, design, bank.prior_samples(), n_outer);
  terms.forward_evaluations += static_cast<std::size_t>(n_outer);

  Array logp, scratch;
  Vector y(obs_dim);
  const double log_m1 = std::log(static_cast<double>(config.m1));
  const double log_m2 = std::log(static_cast<double>(config.m2));

  // Inner-loop buffers for the independent (non-reuse) estimator.
  const auto p = static_cast<Eigen::Index>(problem.parameter_dim());
  Matrix inner1, inner2;
  if (!config.reuse) {
    inner1.resize(p, static_cast<Eigen::Index>(config.m1));
    inner2.resize(p, static_cast<Eigen::Index>(config.m2));
  }

  for (Eigen::Index i = 0; i < n_outer; ++i) {
    y = outer_t.row(i).transpose() + noise.std_devs().cwiseProduct(bank.noise(static_cast<std::size_t>(i)));
    const double ll_self = gaussian_log_density(noise, y, outer_t.row(i).transpose());

    double lm = kNegInf;
    double r = 0.0;
    if (config.reuse) {
      log_likelihoods(noise, y, outer_t, logp);
      const ShiftedSums s = shifted_sums(logp, scratch, true);
      if (s.sum_w > 0.0) {
        lm = s.shift + std::log(s.sum_w) - log_m1;
        r = s.sum_wl / s.sum_w;
      }
    } else {
      auto rng1 = bank.inner_stream(StreamTag::kInnerMarginal, static_cast<std::size_t>(i));
      draw_prior_columns(problem.prior(), rng1, inner1);
      const Matrix g1 = forward_outputs(problem, design, inner1, inner1.cols());
      log_likelihoods(noise, y, g1, logp);
      const ShiftedSums s1 = shifted_sums(logp, scratch, false);

      auto rng2 = bank.inner_stream(StreamTag::kInnerSecondMoment, static_cast<std::size_t>(i));
      draw_prior_columns(problem.prior(), rng2, inner2);
      const Matrix g2 = forward_outputs(problem, design, inner2, inner2.cols());
      log_likelihoods(noise, y, g2, logp);
      const ShiftedSums s2 = shifted_sums(logp, scratch, true);
      terms.forward_evaluations += config.m1 + config.m2;

      if (s1.sum_w > 0.0) {
        lm = s1.shift + std::log(s1.sum_w) - log_m1;
        // ratio = (exp(shift2) * sum_wl / M2) / exp(lm), kept in log form
        if (s2.sum_wl != 0.0) {
          const double log_abs = s2.shift + std::log(std::abs(s2.sum_wl)) - log_m2 - lm;
          r = std::copysign(std::exp(log_abs), s2.sum_wl);
        }
      }
    }

    if (!std::isfinite(lm)) {
      ++terms.dropped;
      continue;
    }
    log_lik[kept] = ll_self;
    log_marg[kept] = lm;
    ratio[kept] = r;
    ++kept;
  }

  const double dropped_fraction =
      static_cast<double>(terms.dropped) / static_cast<double>(config.n_outer);
  if (kept == 0 || dropped_fraction > config.max_dropped_fraction) {
    throw EstimationError(fmt::format("{} of {} outer samples had a zero marginal estimate",
                                      terms.dropped, config.n_outer));
  }
  terms.log_likelihood = log_lik.head(kept);
  terms.log_marginal = log_marg.head(kept);
  terms.m2c_ratio = ratio.head(kept);
  return terms;
}

UtilityEstimate estimate_expected_utility(const Problem& problem, const DesignPoint& design,
                                          const SampleBank& bank, const EstimatorConfig& config) {
  UtilityEstimate out;
  out.terms = compute_outer_terms(problem, design, bank, config);
  out.summands = out.terms.log_likelihood - out.terms.log_marginal;
  out.u_hat = mean(out.summands);
  return out;
}

double estimate_m2a(const OuterTerms& terms) {
  return mean(terms.log_marginal.array().square().matrix());
}

double estimate_m2b(const OuterTerms& terms) {
  return -2.0 * mean(terms.log_likelihood.cwiseProduct(terms.log_marginal));
}

double estimate_m2c(const OuterTerms& terms) {
  return mean(terms.m2c_ratio.array().square().matrix());
}

double estimate_m2c(const Problem& problem, const DesignPoint& design, const SampleBank& bank,
                    const EstimatorConfig& config) {
  return estimate_m2c(compute_outer_terms(problem, design, bank, config));
}

EstimateReport estimate_from_bank(const Problem& problem, const DesignPoint& design,
                                  const SampleBank& bank, const EstimatorConfig& config) {
  UtilityEstimate util = estimate_expected_utility(problem, design, bank, config);
  const OuterTerms& t = util.terms;

  EstimateReport rep;
  rep.design = design;
  rep.config = config;
  rep.bank_seed = bank.master_seed();
  rep.dropped = t.dropped;
  rep.forward_evaluations = t.forward_evaluations;
  rep.u_hat = util.u_hat;
  rep.m2a = estimate_m2a(t);
  rep.m2b = estimate_m2b(t);
  rep.m2c = estimate_m2c(t);
  rep.m2_hat = rep.m2a + rep.m2b + rep.m2c;
  rep.v_hat = rep.m2_hat - rep.u_hat * rep.u_hat;
  rep.j_hat = rep.u_hat - config.lambda * rep.v_hat;

  const Array summands = util.summands.array();
  const Array second = t.log_marginal.array().square() -
                       2.0 * t.log_likelihood.array() * t.log_marginal.array() +
                       t.m2c_ratio.array().square();
  rep.u_std_error = std_error(summands);
  rep.v_std_error = std_error(second - 2.0 * rep.u_hat * summands);
  return rep;
}

double estimate_variance(const Problem& problem, const DesignPoint& design, const SampleBank& bank,
                         const EstimatorConfig& config) {
  return estimate_from_bank(problem, design, bank, config).v_hat;
}

std::uint64_t bank_seed_for(const EstimatorConfig& config, std::uint64_t evaluation_index) {
  if (config.crs_seed) return *config.crs_seed;
  return derive_seed(config.seed, StreamTag::kEvaluation, evaluation_index);
}

EstimateReport estimate_objective(const Problem& problem, const DesignPoint& design,
                                  const EstimatorConfig& config, std::uint64_t evaluation_index) {
  config.validate();
  check_design(problem, design);
  if (!problem.domain().is_feasible(design.coords)) {
    throw ConfigError("design lies outside the feasible design domain");
  }
  const SampleBank bank =
      build_sample_bank(problem, config.n_outer, bank_seed_for(config, evaluation_index));
  return estimate_from_bank(problem, design, bank, config);
}

double exact_utility_grid(const Problem& problem, const DesignPoint& design, const Observation& y,
                          std::size_t grid_size, const std::optional<Box>& bounds) {
  const std::size_t p = problem.parameter_dim();
  if (p > 2) throw ConfigError("grid utility supports parameter dimension <= 2");
  if (grid_size < 2) throw std::invalid_argument("grid_size must be >= 2");
  check_design(problem, design);
  const Box box = bounds ? *bounds : problem.prior().grid_bounds();

  const auto g = static_cast<Eigen::Index>(grid_size);
  const Eigen::Index total = p == 1 ? g : g * g;
  Array log_prior(total), log_post(total);
  Vector theta(static_cast<Eigen::Index>(p));
  Vector mean(static_cast<Eigen::Index>(problem.observation_dim()));
  const Vector step = (box.upper - box.lower) / static_cast<double>(grid_size);

  for (Eigen::Index idx = 0; idx < total; ++idx) {
    theta[0] = box.lower[0] + (static_cast<double>(idx % g) + 0.5) * step[0];
    if (p == 2) theta[1] = box.lower[1] + (static_cast<double>(idx / g) + 0.5) * step[1];
    const double lp = problem.prior().log_density(theta);
    log_prior[idx] = lp;
    if (!std::isfinite(lp)) {
      log_post[idx] = kNegInf;
      continue;
    }
    problem.forward().evaluate(theta, design.coords, mean);
    log_post[idx] = lp + gaussian_log_density(problem.noise(), y.values, mean);
  }

  const double post_norm = log_post.maxCoeff();
  if (!std::isfinite(post_norm)) throw EstimationError("grid posterior underflows everywhere");
  const double log_z_post = log_mean_exp(log_post);
  const double log_z_prior = log_mean_exp(log_prior);

  double kl = 0.0;
  for (Eigen::Index idx = 0; idx < total; ++idx) {
    if (!std::isfinite(log_post[idx])) continue;
    const double lq = log_post[idx] - log_z_post;  // normalized up to the common log(total)
    const double lr = log_prior[idx] - log_z_prior;
    const double w = std::exp(lq) / static_cast<double>(total);
    kl += w * (lq - lr);
  }
  return kl;
}

}  // namespace mvoed
