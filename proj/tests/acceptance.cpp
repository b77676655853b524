// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mvoed/bayes_opt.hpp"
#include "mvoed/benchmarks.hpp"
#include "mvoed/convergence.hpp"
#include "mvoed/diffusion.hpp"
#include "mvoed/estimators.hpp"
#include "mvoed/rng.hpp"

using namespace mvoed;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

DesignPoint design(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index k = 0;
  for (double x : values) v[k++] = x;
  return DesignPoint{v};
}

Outcome linear_gaussian_utility() {
  // Plain MC over the prior predictive validates the closed form first.
  const double sy = std::sqrt(lg_predictive_variance(3.0));
  RandomStream rng(derive_seed(1, StreamTag::kUser, 1));
  double sum = 0.0;
  const int draws = 10000000;
  for (int k = 0; k < draws; ++k) sum += lg_conjugate_kl(sy * rng.normal(), 3.0);
  const double mc = sum / draws;
  const double exact = lg_exact_expected_utility(3.0);

  const auto t0 = std::chrono::steady_clock::now();
  const EstimateReport r = estimate_objective(make_linear_gaussian_problem(), design({3.0}),
                                              EstimatorConfig::reusing(10000, 0.0, 1));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Outcome o;
  o.pass = std::abs(mc - exact) < 2e-3 && std::abs(r.u_hat - exact) < 0.05 && secs < 10.0;
  o.detail = fmt::format("u_hat={:.4f} exact={:.4f} mc_1e7={:.4f} estimate_time={:.2f}s", r.u_hat,
                         exact, mc, secs);
  return o;
}

Outcome linear_gaussian_variance() {
  const auto t0 = std::chrono::steady_clock::now();
  const Problem p = make_linear_gaussian_problem();
  double mean = 0.0;
  for (int s = 1; s <= 10; ++s) {
    mean += estimate_objective(p, design({3.0}), EstimatorConfig::reusing(10000, 0.0, s)).v_hat / 10;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double exact = lg_exact_utility_variance(3.0);
  Outcome o;
  o.pass = std::abs(mean - exact) <= 0.05 * exact && secs < 120.0;
  o.detail = fmt::format("mean_v_hat={:.5f} exact={:.5f} rel_err={:.3f} time={:.1f}s", mean, exact,
                         std::abs(mean - exact) / exact, secs);
  return o;
}

Outcome rate_verification() {
  const auto t0 = std::chrono::steady_clock::now();
  RateStudyConfig c;
  c.tag = EstimatorTag::kV;
  c.ladder = {100, 316, 1000, 3162, 10000};
  c.replicates = 10;
  c.master_seed = 1;
  const RateStudy s = run_rate_study(make_linear_gaussian_problem(), design({3.0}), c);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double vs = s.variance_fit().slope;
  const double bs = s.bias_fit().slope;
  Outcome o;
  o.pass = vs >= -1.25 && vs <= -0.75 && bs >= -1.5 && bs <= -0.5 && secs < 600.0;
  o.detail = fmt::format("variance_slope={:.3f} bias_slope={:.3f} time={:.1f}s", vs, bs, secs);
  return o;
}

Outcome risk_reversal() {
  const Problem p = make_nonlinear_problem({1, 1e-4});
  const EstimatorConfig c = EstimatorConfig::reusing(10000, 1.0, 1);
  const EstimateReport at02 = estimate_objective(p, design({0.2}), c);
  const EstimateReport at1 = estimate_objective(p, design({1.0}), c);
  double best = -1e300, arg = -1.0;
  for (int k = 0; k <= 60; ++k) {
    const double xi = k / 60.0;
    const double j = estimate_objective(p, design({xi}), c, static_cast<std::uint64_t>(k)).j_hat;
    if (j > best) {
      best = j;
      arg = xi;
    }
  }
  Outcome o;
  o.pass = at1.u_hat > at02.u_hat && at02.j_hat > at1.j_hat && std::abs(arg - 0.2) <= 0.05;
  o.detail = fmt::format("U(1)={:.3f} U(0.2)={:.3f} J(0.2)={:.3f} J(1)={:.3f} sweep_argmax={:.4f}",
                         at1.u_hat, at02.u_hat, at02.j_hat, at1.j_hat, arg);
  return o;
}

Outcome design_optimum_2d() {
  const Problem p = make_nonlinear_problem({2, 1e-4});
  int hits = 0;
  std::string found;
  for (std::uint64_t master = 1; master <= 5; ++master) {
    BoConfig cfg;
    cfg.n_init = 5;
    cfg.budget = 40;
    cfg.estimator = EstimatorConfig::reusing(10000, 1.0, master);
    cfg.seed = master;
    const BoResult r = run_bo(p, cfg);
    const Vector& x = r.state.best_design.coords;
    const double dist = (x.array() - 0.2).abs().maxCoeff();
    if (dist <= 0.08) ++hits;
    found += fmt::format(" [{:.3f},{:.3f}]", x[0], x[1]);
  }
  Outcome o;
  o.pass = hits >= 4;
  o.detail = fmt::format("{}/5 seeds within 0.08 of [0.2,0.2]; best designs:{}", hits, found);
  return o;
}

Outcome crs_smoothing() {
  const Problem p = make_linear_gaussian_problem();
  std::vector<DesignPoint> grid;
  for (int k = 0; k <= 60; ++k) grid.push_back(design({3.0 * k / 60.0}));
  Outcome o;
  o.pass = true;
  for (std::size_t n : {std::size_t{100}, std::size_t{1000}}) {
    const CrsStudy s = crs_smoothness_study(p, 0.0, grid, n, 1);
    o.pass = o.pass && s.tv_with_crs < s.tv_without_crs;
    o.detail += fmt::format("N={}: tv_crs={:.4f} tv_fresh={:.4f}; ", n, s.tv_with_crs, s.tv_without_crs);
  }
  return o;
}

Outcome pde_correctness() {
  const PdeConfig c;
  const DiffusionSolver solver(c);

  DiffusionField g = solver.zero_field();
  solver.advance(g, solver.source_term(0.4, 0.7), 20, c.dt);
  const Matrix zero = Matrix::Zero(c.cells, c.cells);
  double worst_drift = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double before = g.total_mass();
    solver.step(g, zero, c.dt);
    worst_drift = std::max(worst_drift, std::abs(g.total_mass() - before) / before);
  }

  const DiffusionField f = solver.solve(0.5, 0.5);
  const Matrix& v = f.values();
  const double scale = v.cwiseAbs().maxCoeff();
  const double asym = std::max((v - v.colwise().reverse()).cwiseAbs().maxCoeff(),
                               (v - v.rowwise().reverse()).cwiseAbs().maxCoeff()) / scale;
  const double mass_err = std::abs(f.total_mass() - 0.32) / 0.32;

  const Matrix src = solver.source_term(0.3, 0.6);
  Matrix res[3];
  for (int k = 0; k < 3; ++k) {
    DiffusionField h = solver.zero_field();
    solver.advance(h, src, c.steps() << k, c.dt / (1 << k));
    res[k] = h.values();
  }
  const double order = std::log2((res[0] - res[1]).norm() / (res[1] - res[2]).norm());

  Outcome o;
  o.pass = worst_drift < 1e-10 && asym <= 1e-10 && mass_err < 0.01 && order >= 1.8;
  o.detail = fmt::format("mass_drift_per_step={:.2e} mirror_asymmetry={:.2e} mass_err={:.2e} order={:.3f}",
                         worst_drift, asym, mass_err, order);
  return o;
}

Outcome case3_structure() {
  const std::filesystem::path cache = std::filesystem::path(MVOED_CACHE_DIR) / "default_r21.bin";
  const auto table = build_surrogate(PdeConfig{}, 21, cache);
  const Problem p = make_diffusion_problem(table, 1, 0.05 * 0.05);
  const EstimatorConfig c = EstimatorConfig::reusing(3000, 0.5, 11);
  int ua = 0, ub = 0, va = 0, vb = 0, ja = 0, jb = 0;
  double umax = -1e300, vmax = -1e300, jmax = -1e300;
  for (int a = 0; a <= 8; ++a) {
    for (int b = 0; b <= 8; ++b) {
      const EstimateReport r = estimate_objective(p, design({a / 8.0, b / 8.0}), c);
      if (r.u_hat > umax) umax = r.u_hat, ua = a, ub = b;
      if (r.v_hat > vmax) vmax = r.v_hat, va = a, vb = b;
      if (r.j_hat > jmax) jmax = r.j_hat, ja = a, jb = b;
    }
  }
  // Chebyshev distance to the nearest corner of the 9x9 grid.
  const auto corner_dist = [](int a, int b) { return std::max(std::min(a, 8 - a), std::min(b, 8 - b)); };
  Outcome o;
  o.pass = corner_dist(ua, ub) <= 1 && corner_dist(va, vb) <= 1 && corner_dist(ja, jb) != 0;
  o.detail = fmt::format("argmax U=({},{}) argmax V=({},{}) argmax J=({},{})", ua, ub, va, vb, ja, jb);
  return o;
}

Outcome identities() {
  struct Case {
    Problem problem;
    DesignPoint xi;
  };
  std::vector<Case> cases = {{make_linear_gaussian_problem(), design({2.5})},
                             {make_nonlinear_problem({1, 1e-4}), design({0.3})},
                             {make_nonlinear_problem({2, 1e-4}), design({0.2, 0.7})}};
  bool ok = true;
  int checked = 0;
  for (const Case& cs : cases) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      EstimatorConfig c = EstimatorConfig::reusing(1000, 0.0, seed);
      const EstimateReport r0 = estimate_objective(cs.problem, cs.xi, c);
      c.lambda = 0.8;
      const EstimateReport r1 = estimate_objective(cs.problem, cs.xi, c);
      ok = ok && r0.j_hat == r0.u_hat && r0.v_hat == r0.m2_hat - r0.u_hat * r0.u_hat &&
           r0.m2_hat == r0.m2a + r0.m2b + r0.m2c && r0.forward_evaluations == 1000 &&
           r1.j_hat == r1.u_hat - 0.8 * r1.v_hat && r1.v_hat == r0.v_hat;
      ++checked;
    }
  }
  Outcome o;
  o.pass = ok;
  o.detail = fmt::format("{} design evaluations checked bit-exactly", checked);
  return o;
}

Outcome oracle_equivalence() {
  struct Stats {
    double mean_u = 0, mean_v = 0, var_u = 0, var_v = 0;
  };
  const auto summarize = [](const std::vector<EstimateReport>& reps) {
    Stats s;
    const double n = static_cast<double>(reps.size());
    for (const auto& r : reps) s.mean_u += r.u_hat / n, s.mean_v += r.v_hat / n;
    for (const auto& r : reps) {
      s.var_u += std::pow(r.u_hat - s.mean_u, 2) / (n - 1);
      s.var_v += std::pow(r.v_hat - s.mean_v, 2) / (n - 1);
    }
    return s;
  };
  struct Case {
    std::string label;
    Problem problem;
    DesignPoint xi;
  };
  const std::vector<Case> cases = {{"lingauss xi=1", make_linear_gaussian_problem(), design({1.0})},
                                   {"nonlinear xi=0.5", make_nonlinear_problem({1, 1e-4}), design({0.5})}};
  Outcome o;
  o.pass = true;
  const int seeds = 20;
  for (const Case& cs : cases) {
    std::vector<EstimateReport> reuse, indep;
    for (int s = 0; s < seeds; ++s) {
      EstimatorConfig c = EstimatorConfig::reusing(2000, 0.0, derive_seed(10, StreamTag::kUser, s));
      reuse.push_back(estimate_objective(cs.problem, cs.xi, c));
      c.reuse = false;
      c.crs_seed = derive_seed(20, StreamTag::kUser, s);
      indep.push_back(estimate_objective(cs.problem, cs.xi, c));
    }
    const Stats a = summarize(reuse), b = summarize(indep);
    const double se_u = std::sqrt((a.var_u + b.var_u) / seeds);
    const double se_v = std::sqrt((a.var_v + b.var_v) / seeds);
    const double zu = std::abs(a.mean_u - b.mean_u) / se_u;
    const double zv = std::abs(a.mean_v - b.mean_v) / se_v;
    o.pass = o.pass && zu <= 3.0 && zv <= 3.0;
    o.detail += fmt::format("{}: dU={:.2f}SE dV={:.2f}SE; ", cs.label, zu, zv);
  }

  const Problem lg = make_linear_gaussian_problem();
  double worst = 0.0;
  for (double xi : {0.5, 1.0, 2.0, 3.0}) {
    // Observations spread over +-3 prior-predictive standard deviations.
    const double sy = std::sqrt(lg_predictive_variance(xi));
    for (double z : {-3.0, -1.0, 0.0, 0.5, 2.0, 3.0}) {
      const double y = sy * z;
      const double grid = exact_utility_grid(lg, design({xi}), Observation{Vector::Constant(1, y)}, 4000);
      worst = std::max(worst, std::abs(grid - lg_conjugate_kl(y, xi)));
    }
  }
  o.pass = o.pass && worst < 1e-3;
  o.detail += fmt::format("grid-vs-conjugate KL max diff={:.2e}", worst);
  return o;
}

}  // namespace

int main() {
  std::filesystem::create_directories(MVOED_CACHE_DIR);
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, linear_gaussian_utility}, {2, linear_gaussian_variance}, {3, rate_verification},
      {4, risk_reversal},           {5, design_optimum_2d},        {6, crs_smoothing},
      {7, pde_correctness},         {8, case3_structure},          {9, identities},
      {10, oracle_equivalence}};
  int failures = 0;
  for (const auto& [id, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = fmt::format("exception: {}", e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s criterion %d: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
