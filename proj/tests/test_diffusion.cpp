#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mvoed/diffusion.hpp"
#include "mvoed/error.hpp"
#include "mvoed/rng.hpp"

using namespace mvoed;

namespace {

std::filesystem::path cache_dir() { return MVOED_CACHE_DIR; }

// Dyadic spacings so that cell centers and lattice nodes are exact in binary.
PdeConfig small_config() {
  PdeConfig c;
  c.cells = 16;
  c.dt = 1.0 / 512;
  c.final_time = 0.0625;
  c.source_width = 0.1;
  return c;
}

std::shared_ptr<const SurrogateTable> default_table() {
  static auto table =
      build_surrogate(PdeConfig{}, 21, cache_dir() / "default_r21.bin");
  return table;
}

}  // namespace

TEST_CASE("zero source leaves a zero field") {
  const DiffusionSolver solver(PdeConfig{});
  const DiffusionField f = solver.solve(0.3, 0.7);
  DiffusionField g = solver.zero_field();
  solver.advance(g, Matrix::Zero(100, 100), 50, 5e-4);
  CHECK(g.values().cwiseAbs().maxCoeff() == 0.0);
  PdeConfig off;
  off.source_strength = 0.0;
  CHECK(solve_diffusion(0.3, 0.7, off).values().cwiseAbs().maxCoeff() == 0.0);
  CHECK(f.values().minCoeff() >= 0.0);
}

TEST_CASE("source-free steps conserve mass") {
  for (auto obstacles : {std::vector<Rectangle>{}, building_layout(5)}) {
    PdeConfig c;
    c.obstacles = obstacles;
    const DiffusionSolver solver(c);
    DiffusionField g = solver.zero_field();
    const Matrix src = solver.source_term(0.5, 0.3);
    solver.advance(g, src, 40, c.dt);
    const Matrix zero = Matrix::Zero(c.cells, c.cells);
    for (int k = 0; k < 20; ++k) {
      const double before = g.total_mass();
      solver.step(g, zero, c.dt);
      REQUIRE(std::abs(g.total_mass() - before) / before < 1e-10);
    }
  }
}

TEST_CASE("source mass balance") {
  const PdeConfig c;
  const DiffusionSolver solver(c);
  const DiffusionField f = solver.solve(0.5, 0.5);
  CHECK(std::abs(f.total_mass() - 0.32) / 0.32 < 0.01);
  // The scheme is conservative, so the mass equals T times the discrete source mass.
  const double h = c.spacing();
  const double injected = c.final_time * solver.source_term(0.5, 0.5).sum() * h * h;
  CHECK(f.total_mass() == doctest::Approx(injected).epsilon(1e-10));

  PdeConfig blocked;
  blocked.obstacles = building_layout(4);
  const DiffusionSolver s2(blocked);
  const DiffusionField g = s2.solve(0.3, 0.5);
  const double injected2 = blocked.final_time * s2.source_term(0.3, 0.5).sum() * h * h;
  CHECK(g.total_mass() == doctest::Approx(injected2).epsilon(1e-10));
}

TEST_CASE("centered source gives a symmetric field") {
  const DiffusionField f = solve_diffusion(0.5, 0.5, PdeConfig{});
  const Matrix& v = f.values();
  const double scale = v.cwiseAbs().maxCoeff();
  CHECK((v - v.colwise().reverse()).cwiseAbs().maxCoeff() <= 1e-10 * scale);
  CHECK((v - v.rowwise().reverse()).cwiseAbs().maxCoeff() <= 1e-10 * scale);
  // The x-y-x splitting order breaks the diagonal symmetry at splitting-error level only.
  CHECK((v - v.transpose()).cwiseAbs().maxCoeff() <= 2e-3 * scale);
}

TEST_CASE("solution is linear in the source strength") {
  PdeConfig c = small_config();
  const DiffusionField one = solve_diffusion(0.3, 0.6, c);
  c.source_strength *= 2.0;
  const DiffusionField two = solve_diffusion(0.3, 0.6, c);
  CHECK((two.values() - 2.0 * one.values()).cwiseAbs().maxCoeff() <=
        1e-13 * two.values().cwiseAbs().maxCoeff());
}

TEST_CASE("temporal self-convergence is second order") {
  const PdeConfig c;
  const DiffusionSolver solver(c);
  const Matrix src = solver.source_term(0.3, 0.6);
  Matrix result[3];
  for (int k = 0; k < 3; ++k) {
    DiffusionField g = solver.zero_field();
    solver.advance(g, src, c.steps() << k, c.dt / (1 << k));
    result[k] = g.values();
  }
  const double order = std::log2((result[0] - result[1]).norm() / (result[1] - result[2]).norm());
  CHECK(order >= 1.8);
}

TEST_CASE("obstacle cells stay at zero and block diffusion") {
  PdeConfig c;
  c.obstacles = building_layout(4);
  const DiffusionField f = solve_diffusion(0.2, 0.5, c);
  const auto mask = obstacle_mask(c);
  CHECK(mask.count() > 0);
  for (int j = 0; j < c.cells; ++j) {
    for (int i = 0; i < c.cells; ++i) {
      if (mask(i, j)) REQUIRE(f.values()(i, j) == 0.0);
    }
  }
  // The wall shadows the cell directly behind it compared with an open domain.
  const DiffusionField open = solve_diffusion(0.2, 0.5, PdeConfig{});
  CHECK(f.interpolate(0.62, 0.5) < open.interpolate(0.62, 0.5));
}

TEST_CASE("concentration is higher near the source") {
  const DiffusionField f = solve_diffusion(0.25, 0.25, PdeConfig{});
  CHECK(f.interpolate(0.25, 0.25) > f.interpolate(0.5, 0.5));
  CHECK(f.interpolate(0.5, 0.5) > f.interpolate(0.9, 0.9));
}

TEST_CASE("surrogate reproduces stored values at lattice nodes and grid points") {
  const PdeConfig c = small_config();
  const auto table = build_surrogate(c, 5);
  const DiffusionSolver solver(c);
  for (int a : {0, 2, 4}) {
    for (int b : {0, 1, 3}) {
      const DiffusionField direct = solver.solve(a / 4.0, b / 4.0);
      CHECK(table->field(a, b).values() == direct.values());
      for (int i : {0, 5, 15}) {
        for (int j : {0, 7, 15}) {
          const double zx = (i + 0.5) / 16.0, zy = (j + 0.5) / 16.0;
          CHECK(table->evaluate(a / 4.0, b / 4.0, zx, zy) == direct.values()(i, j));
        }
      }
    }
  }
}

TEST_CASE("surrogate mid-cell error against direct solves") {
  const auto table = default_table();
  RandomStream rng(20);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double tx = rng.uniform(), ty = rng.uniform(), zx = rng.uniform(), zy = rng.uniform();
    const double exact = solve_diffusion(tx, ty, PdeConfig{}).interpolate(zx, zy);
    worst = std::max(worst, std::abs(exact - table->evaluate(tx, ty, zx, zy)));
  }
  MESSAGE("max mid-cell error (21x21 lattice): " << worst);
  CHECK(worst < 2e-2);
}

TEST_CASE("surrogate error shrinks with lattice refinement") {
  PdeConfig c;
  c.cells = 50;
  c.dt = 1e-3;
  const auto coarse = build_surrogate(c, 11);
  const auto fine = build_surrogate(c, 21);
  const DiffusionSolver solver(c);
  RandomStream rng(21);
  double e_coarse = 0.0, e_fine = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double tx = rng.uniform(), ty = rng.uniform(), zx = rng.uniform(), zy = rng.uniform();
    const double exact = solver.solve(tx, ty).interpolate(zx, zy);
    e_coarse += std::abs(exact - coarse->evaluate(tx, ty, zx, zy));
    e_fine += std::abs(exact - fine->evaluate(tx, ty, zx, zy));
  }
  CHECK(e_fine < 0.5 * e_coarse);
}

TEST_CASE("surrogate is at least 1000 times faster than a direct solve") {
  const auto table = default_table();
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  const DiffusionField f = solve_diffusion(0.37, 0.61, PdeConfig{});
  const double direct = std::chrono::duration<double>(clock::now() - t0).count();
  RandomStream rng(3);
  double sink = f.values()(0, 0);
  const int queries = 100000;
  t0 = clock::now();
  for (int k = 0; k < queries; ++k) {
    sink += table->evaluate(rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform());
  }
  const double each = std::chrono::duration<double>(clock::now() - t0).count() / queries;
  CHECK(std::isfinite(sink));
  MESSAGE("direct " << direct << " s, surrogate " << each << " s, ratio " << direct / each);
  CHECK(direct / each >= 1e3);
}

TEST_CASE("surrogate cache round trip and validation") {
  const PdeConfig c = small_config();
  const auto path = cache_dir() / "unit_small.bin";
  std::filesystem::remove(path);
  const auto built = build_surrogate(c, 5, path);
  REQUIRE(std::filesystem::exists(path));
  const SurrogateHeader h = read_surrogate_header(path);
  CHECK(h.version == 1);
  CHECK(h.config_hash == c.hash());
  CHECK(h.resolution == 5);
  CHECK(h.nx == 16);
  CHECK(h.ny == 16);
  CHECK(std::filesystem::file_size(path) == 8 + 4 + 8 + 4 * 3 + 25 * 256 * 8);

  const auto loaded = load_surrogate(path, c);
  for (int a = 0; a < 5; ++a) {
    for (int b = 0; b < 5; ++b) REQUIRE(loaded->field(a, b).values() == built->field(a, b).values());
  }
  PdeConfig other = c;
  other.source_strength = 3.0;
  CHECK(other.hash() != c.hash());
  CHECK_THROWS_AS(load_surrogate(path, other), IoError);
  CHECK_THROWS_AS(load_surrogate(cache_dir() / "missing.bin", c), IoError);

  const auto garbage = cache_dir() / "garbage.bin";
  std::ofstream(garbage) << "not a cache";
  CHECK_THROWS_AS(read_surrogate_header(garbage), IoError);
}

TEST_CASE("sensors inside obstacles are rejected") {
  PdeConfig c = small_config();
  c.obstacles = {Rectangle{0.25, 0.5, 0.25, 0.5}};
  const auto table = build_surrogate(c, 3);
  Vector theta(2), sensors(4);
  theta << 0.8, 0.8;
  sensors << 0.1, 0.1, 0.3, 0.3;
  CHECK_THROWS_AS(surrogate_forward(*table, theta, sensors), std::invalid_argument);
  sensors << 0.1, 0.1, 0.7, 0.7;
  CHECK(surrogate_forward(*table, theta, sensors).size() == 2);
  const Problem p = make_diffusion_problem(table, 2);
  CHECK_FALSE(p.domain().is_feasible(Vector::Constant(4, 0.3)));
  CHECK(p.domain().is_feasible(sensors));
}

TEST_CASE("masked prior acceptance rate") {
  const auto prior = masked_prior_sampler({Rectangle{0.4, 0.6, 0.4, 0.6}});
  RandomStream rng(17);
  Vector theta(2);
  long proposals = 0;
  for (int k = 0; k < 100000; ++k) proposals += prior->draw_counting(rng, theta);
  CHECK(std::abs(100000.0 / proposals - 0.96) < 0.01);
}

TEST_CASE("building layouts are valid") {
  for (int k : {4, 5}) {
    CHECK_NOTHROW(validate_obstacles(building_layout(k)));
    CHECK_NOTHROW(masked_prior_sampler(building_layout(k)));
  }
  CHECK_THROWS_AS(building_layout(3), ConfigError);
}

TEST_CASE("pde config validation") {
  PdeConfig c;
  c.dt = 0.0007;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = PdeConfig{};
  c.cells = 2;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
