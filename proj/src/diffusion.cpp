#include "mvoed/diffusion.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "mvoed/error.hpp"

namespace mvoed {
namespace {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

constexpr char kMagic[8] = {'M', 'V', 'O', 'E', 'D', 'S', 'R', 'G'};
constexpr std::uint32_t kCacheVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "surrogate cache I/O assumes a little-endian host");

// Bilinear stencil on cell centers, shared by every field with the same mask.
struct Stencil {
  int i0 = 0;
  int j0 = 0;
  double w[4] = {0, 0, 0, 0};  // (i0,j0), (i0+1,j0), (i0,j0+1), (i0+1,j0+1)
  bool empty = true;
};

Stencil make_stencil(const Mask& mask, double x, double y) {
  const int nx = static_cast<int>(mask.rows());
  const int ny = static_cast<int>(mask.cols());
  const double fx = x * nx - 0.5;
  const double fy = y * ny - 0.5;
  Stencil s;
  s.i0 = std::clamp(static_cast<int>(std::floor(fx)), 0, nx - 2);
  s.j0 = std::clamp(static_cast<int>(std::floor(fy)), 0, ny - 2);
  const double tx = std::clamp(fx - s.i0, 0.0, 1.0);
  const double ty = std::clamp(fy - s.j0, 0.0, 1.0);
  const double raw[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
  double total = 0.0;
  for (int k = 0; k < 4; ++k) {
    const bool m = mask(s.i0 + (k & 1), s.j0 + (k >> 1));
    s.w[k] = m ? 0.0 : raw[k];
    total += s.w[k];
  }
  if (total > 0.0) {
    for (double& w : s.w) w /= total;
    s.empty = false;
  }
  return s;
}

double apply_stencil(const Stencil& s, const Matrix& v) {
  return s.w[0] * v(s.i0, s.j0) + s.w[1] * v(s.i0 + 1, s.j0) + s.w[2] * v(s.i0, s.j0 + 1) +
         s.w[3] * v(s.i0 + 1, s.j0 + 1);
}

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

}  // namespace

int PdeConfig::steps() const { return static_cast<int>(std::lround(final_time / dt)); }

std::uint64_t PdeConfig::hash() const {
  std::string text = fmt::format("cells={};dt={:.17g};T={:.17g};s={:.17g};h={:.17g}", cells, dt,
                                 final_time, source_strength, source_width);
  for (const auto& r : obstacles) {
    text += fmt::format(";rect={:.17g},{:.17g},{:.17g},{:.17g}", r.xmin, r.xmax, r.ymin, r.ymax);
  }
  return fnv1a(text);
}

void PdeConfig::validate() const {
  if (cells < 4) throw ConfigError("PDE grid needs at least 4 cells per axis");
  if (!(dt > 0.0) || !(final_time > 0.0)) throw ConfigError("PDE dt and final time must be > 0");
  if (std::abs(steps() * dt - final_time) > 1e-9 * final_time) {
    throw ConfigError("PDE final time must be a whole number of time steps");
  }
  if (!(source_width > 0.0)) throw ConfigError("source width must be > 0");
  validate_obstacles(obstacles);
}

Mask obstacle_mask(const PdeConfig& config) {
  Mask mask = Mask::Constant(config.cells, config.cells, false);
  const double h = config.spacing();
  for (int j = 0; j < config.cells; ++j) {
    for (int i = 0; i < config.cells; ++i) {
      const double x = (i + 0.5) * h;
      const double y = (j + 0.5) * h;
      for (const auto& r : config.obstacles) {
        if (r.contains(x, y)) mask(i, j) = true;
      }
    }
  }
  return mask;
}

DiffusionField::DiffusionField(Matrix values, Mask mask)
    : values_(std::move(values)), mask_(std::move(mask)) {
  if (values_.rows() != mask_.rows() || values_.cols() != mask_.cols()) {
    throw std::invalid_argument("field and mask shapes differ");
  }
}

double DiffusionField::total_mass() const {
  const double h = spacing();
  return values_.sum() * h * h;
}

double DiffusionField::interpolate(double x, double y) const {
  const Stencil s = make_stencil(mask_, x, y);
  return s.empty ? 0.0 : apply_stencil(s, values_);
}

DiffusionSolver::DiffusionSolver(PdeConfig config) : config_(std::move(config)) {
  config_.validate();
  mask_ = obstacle_mask(config_);
  const int n = config_.cells;
  // Masked cells never enter a segment and so stay at zero.
  const auto collect = [n](auto&& is_open, std::vector<Segment>& out) {
    for (int line = 0; line < n; ++line) {
      int k = 0;
      while (k < n) {
        if (!is_open(line, k)) {
          ++k;
          continue;
        }
        const int start = k;
        while (k < n && is_open(line, k)) ++k;
        out.push_back(Segment{line, start, k - start});
      }
    }
  };
  collect([this](int j, int i) { return !mask_(i, j); }, x_segments_);
  collect([this](int i, int j) { return !mask_(i, j); }, y_segments_);
  half_x_ = make_factors(x_segments_, 0.5 * config_.dt);
  full_y_ = make_factors(y_segments_, config_.dt);
}

DiffusionField DiffusionSolver::zero_field() const {
  return DiffusionField(Matrix::Zero(config_.cells, config_.cells), mask_);
}

Matrix DiffusionSolver::source_term(double theta_x, double theta_y) const {
  const double h = config_.spacing();
  const double w2 = config_.source_width * config_.source_width;
  const double amp = config_.source_strength / (2.0 * std::numbers::pi * w2);
  Matrix s(config_.cells, config_.cells);
  for (int j = 0; j < config_.cells; ++j) {
    for (int i = 0; i < config_.cells; ++i) {
      const double dx = (i + 0.5) * h - theta_x;
      const double dy = (j + 0.5) * h - theta_y;
      s(i, j) = mask_(i, j) ? 0.0 : amp * std::exp(-(dx * dx + dy * dy) / (2.0 * w2));
    }
  }
  return s;
}

DiffusionSolver::SweepFactors DiffusionSolver::make_factors(const std::vector<Segment>& segments,
                                                          double tau) const {
  const double h = config_.spacing();
  SweepFactors f;
  f.r = tau / (2.0 * h * h);
  const double off = -f.r;
  for (const Segment& seg : segments) {
    if (f.by_length.contains(seg.length)) continue;
    SegmentFactor fac;
    const auto n = static_cast<std::size_t>(seg.length);
    fac.multiplier.assign(n, 0.0);
    fac.inverse_pivot.assign(n, 0.0);
    double pivot = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const int faces = (k > 0 ? 1 : 0) + (k + 1 < n ? 1 : 0);
      double diag = 1.0 + f.r * faces;
      if (k > 0) {
        fac.multiplier[k] = off / pivot;
        diag -= fac.multiplier[k] * off;
      }
      pivot = diag;
      fac.inverse_pivot[k] = 1.0 / pivot;
    }
    f.by_length.emplace(seg.length, std::move(fac));
  }
  return f;
}

void DiffusionSolver::sweep(Matrix& g, const std::vector<Segment>& segments,
                            const SweepFactors& factors, const Matrix* source, double tau) const {
  const double r = factors.r;
  const double off = -r;
  std::vector<double> rhs(static_cast<std::size_t>(g.rows()));
  for (const Segment& seg : segments) {
    double* v = g.col(seg.line).data() + seg.start;
    const double* src = source ? source->col(seg.line).data() + seg.start : nullptr;
    const SegmentFactor& fac = factors.by_length.at(seg.length);
    const int n = seg.length;
    for (int k = 0; k < n; ++k) {
      double lap = 0.0;
      if (k > 0) lap += v[k - 1] - v[k];
      if (k + 1 < n) lap += v[k + 1] - v[k];
      double b = v[k] + r * lap;
      if (src) b += tau * src[k];
      if (k > 0) b -= fac.multiplier[static_cast<std::size_t>(k)] * rhs[static_cast<std::size_t>(k - 1)];
      rhs[static_cast<std::size_t>(k)] = b;
    }
    v[n - 1] = rhs[static_cast<std::size_t>(n - 1)] * fac.inverse_pivot[static_cast<std::size_t>(n - 1)];
    for (int k = n - 2; k >= 0; --k) {
      const auto u = static_cast<std::size_t>(k);
      v[k] = (rhs[u] - off * v[k + 1]) * fac.inverse_pivot[u];
    }
  }
}

void DiffusionSolver::step(DiffusionField& field, const Matrix& source, double dt) const {
  const bool nominal = dt == config_.dt;
  const SweepFactors local_x = nominal ? SweepFactors{} : make_factors(x_segments_, 0.5 * dt);
  const SweepFactors local_y = nominal ? SweepFactors{} : make_factors(y_segments_, dt);
  const SweepFactors& fx = nominal ? half_x_ : local_x;
  const SweepFactors& fy = nominal ? full_y_ : local_y;

  Matrix& g = field.values();
  sweep(g, x_segments_, fx, nullptr, 0.5 * dt);
  Matrix gt = g.transpose();
  const Matrix source_t = source.transpose();
  sweep(gt, y_segments_, fy, &source_t, dt);
  g = gt.transpose();
  sweep(g, x_segments_, fx, nullptr, 0.5 * dt);
}

void DiffusionSolver::advance(DiffusionField& field, const Matrix& source, int steps,
                              double dt) const {
  for (int k = 0; k < steps; ++k) step(field, source, dt);
}

DiffusionField DiffusionSolver::solve(double theta_x, double theta_y) const {
  DiffusionField field = zero_field();
  advance(field, source_term(theta_x, theta_y), config_.steps(), config_.dt);
  return field;
}

DiffusionField solve_diffusion(double theta_x, double theta_y, const PdeConfig& config) {
  return DiffusionSolver(config).solve(theta_x, theta_y);
}

SurrogateTable::SurrogateTable(PdeConfig config, int resolution, std::vector<DiffusionField> fields)
    : config_(std::move(config)), resolution_(resolution), fields_(std::move(fields)) {
  if (resolution_ < 2) throw ConfigError("surrogate lattice needs at least 2 nodes per axis");
  if (fields_.size() != static_cast<std::size_t>(resolution_ * resolution_)) {
    throw std::invalid_argument("surrogate table field count does not match the lattice");
  }
}

double SurrogateTable::evaluate(double theta_x, double theta_y, double z_x, double z_y) const {
  const double fa = theta_x * (resolution_ - 1);
  const double fb = theta_y * (resolution_ - 1);
  const int a0 = std::clamp(static_cast<int>(std::floor(fa)), 0, resolution_ - 2);
  const int b0 = std::clamp(static_cast<int>(std::floor(fb)), 0, resolution_ - 2);
  const double ta = std::clamp(fa - a0, 0.0, 1.0);
  const double tb = std::clamp(fb - b0, 0.0, 1.0);
  const Stencil s = make_stencil(fields_.front().mask(), z_x, z_y);
  if (s.empty) return 0.0;
  return (1 - ta) * (1 - tb) * apply_stencil(s, field(a0, b0).values()) +
         ta * (1 - tb) * apply_stencil(s, field(a0 + 1, b0).values()) +
         (1 - ta) * tb * apply_stencil(s, field(a0, b0 + 1).values()) +
         ta * tb * apply_stencil(s, field(a0 + 1, b0 + 1).values());
}

void save_surrogate(const SurrogateTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kCacheVersion);
  write_pod(out, table.config().hash());
  const auto res = static_cast<std::uint32_t>(table.resolution());
  const auto cells = static_cast<std::uint32_t>(table.config().cells);
  write_pod(out, res);
  write_pod(out, cells);
  write_pod(out, cells);
  for (int b = 0; b < table.resolution(); ++b) {
    for (int a = 0; a < table.resolution(); ++a) {
      const Matrix& v = table.field(a, b).values();
      out.write(reinterpret_cast<const char*>(v.data()),
                static_cast<std::streamsize>(v.size() * sizeof(double)));
    }
  }
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

SurrogateHeader read_surrogate_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError(fmt::format("'{}' is not a surrogate cache", path.string()));
  }
  SurrogateHeader h;
  h.version = read_pod<std::uint32_t>(in);
  h.config_hash = read_pod<std::uint64_t>(in);
  h.resolution = read_pod<std::uint32_t>(in);
  h.nx = read_pod<std::uint32_t>(in);
  h.ny = read_pod<std::uint32_t>(in);
  if (!in) throw IoError(fmt::format("truncated header in '{}'", path.string()));
  return h;
}

std::shared_ptr<const SurrogateTable> load_surrogate(const std::filesystem::path& path,
                                                     const PdeConfig& config) {
  const SurrogateHeader h = read_surrogate_header(path);
  if (h.version != kCacheVersion) throw IoError("unsupported surrogate cache version");
  if (h.config_hash != config.hash()) throw IoError("surrogate cache was built for another config");
  if (h.nx != static_cast<std::uint32_t>(config.cells) || h.ny != h.nx) {
    throw IoError("surrogate cache grid does not match the config");
  }
  std::ifstream in(path, std::ios::binary);
  in.seekg(static_cast<std::streamoff>(sizeof(kMagic) + 4 + 8 + 12));
  const Mask mask = obstacle_mask(config);
  const int res = static_cast<int>(h.resolution);
  std::vector<DiffusionField> fields;
  fields.reserve(static_cast<std::size_t>(res * res));
  for (int k = 0; k < res * res; ++k) {
    Matrix v(config.cells, config.cells);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    fields.emplace_back(std::move(v), mask);
  }
  if (!in) throw IoError(fmt::format("truncated payload in '{}'", path.string()));
  return std::make_shared<const SurrogateTable>(config, res, std::move(fields));
}

std::shared_ptr<const SurrogateTable> build_surrogate(
    const PdeConfig& config, int resolution,
    const std::optional<std::filesystem::path>& cache_path) {
  if (resolution < 2) throw ConfigError("surrogate lattice needs at least 2 nodes per axis");
  if (cache_path && std::filesystem::exists(*cache_path)) {
    const SurrogateHeader h = read_surrogate_header(*cache_path);
    if (h.version == kCacheVersion && h.config_hash == config.hash() &&
        h.resolution == static_cast<std::uint32_t>(resolution)) {
      return load_surrogate(*cache_path, config);
    }
  }

  const DiffusionSolver solver(config);
  const int total = resolution * resolution;
  std::vector<DiffusionField> fields(static_cast<std::size_t>(total));
  const auto lattice = [&](int a) { return static_cast<double>(a) / (resolution - 1); };
  const int workers =
      std::clamp(static_cast<int>(std::thread::hardware_concurrency()), 1, std::max(1, total));
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int k = w; k < total; k += workers) {
          fields[static_cast<std::size_t>(k)] =
              solver.solve(lattice(k % resolution), lattice(k / resolution));
        }
      });
    }
  }
  auto table = std::make_shared<const SurrogateTable>(config, resolution, std::move(fields));
  if (cache_path) save_surrogate(*table, *cache_path);
  return table;
}

Vector surrogate_forward(const SurrogateTable& table, const ConstVectorRef& theta,
                         const ConstVectorRef& sensors) {
  if (theta.size() != 2 || sensors.size() % 2 != 0) {
    throw std::invalid_argument("surrogate_forward needs theta in R^2 and sensor pairs");
  }
  const Eigen::Index m = sensors.size() / 2;
  Vector out(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double zx = sensors[2 * k];
    const double zy = sensors[2 * k + 1];
    for (const auto& r : table.config().obstacles) {
      if (r.contains(zx, zy)) {
        throw std::invalid_argument(fmt::format("sensor {} lies inside an obstacle", k));
      }
    }
    out[k] = table.evaluate(theta[0], theta[1], zx, zy);
  }
  return out;
}

std::shared_ptr<const UniformPrior> masked_prior_sampler(const std::vector<Rectangle>& obstacles) {
  return std::make_shared<const UniformPrior>(Vector::Zero(2), Vector::Ones(2), obstacles);
}

SurrogateForwardModel::SurrogateForwardModel(std::shared_ptr<const SurrogateTable> table,
                                             std::size_t sensors)
    : table_(std::move(table)), sensors_(sensors) {
  if (!table_) throw ConfigError("surrogate forward model needs a table");
  if (sensors_ == 0) throw ConfigError("at least one sensor is required");
}

void SurrogateForwardModel::evaluate(const ConstVectorRef& theta, const ConstVectorRef& design,
                                     VectorRef out) const {
  out = surrogate_forward(*table_, theta, design);
}

DirectDiffusionModel::DirectDiffusionModel(PdeConfig config, std::size_t sensors)
    : solver_(std::move(config)), sensors_(sensors) {
  if (sensors_ == 0) throw ConfigError("at least one sensor is required");
}

void DirectDiffusionModel::evaluate(const ConstVectorRef& theta, const ConstVectorRef& design,
                                    VectorRef out) const {
  const DiffusionField field = solver_.solve(theta[0], theta[1]);
  for (std::size_t k = 0; k < sensors_; ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    out[i] = field.interpolate(design[2 * i], design[2 * i + 1]);
  }
}

Problem make_diffusion_problem(std::shared_ptr<const SurrogateTable> table, std::size_t sensors,
                               double noise_var) {
  if (!table) throw ConfigError("diffusion problem needs a surrogate table");
  const std::vector<Rectangle> obstacles = table->config().obstacles;
  const auto d = static_cast<Eigen::Index>(2 * sensors);
  DesignDomain::Predicate outside_obstacles;
  if (!obstacles.empty()) {
    outside_obstacles = [obstacles](const ConstVectorRef& xi) {
      for (Eigen::Index k = 0; k + 1 < xi.size(); k += 2) {
        for (const auto& r : obstacles) {
          if (r.contains(xi[k], xi[k + 1])) return false;
        }
      }
      return true;
    };
  }
  DesignDomain domain(Box{Vector::Zero(d), Vector::Ones(d)}, std::move(outside_obstacles));
  auto model = std::make_shared<SurrogateForwardModel>(std::move(table), sensors);
  return Problem(fmt::format("diffusion-{}s", sensors), masked_prior_sampler(obstacles),
                 std::move(model), GaussianNoiseModel::isotropic(sensors, noise_var),
                 std::move(domain));
}

std::vector<Rectangle> building_layout(int index) {
  switch (index) {
    case 4:
      // One central wall splitting the domain into left and right halves.
      return {Rectangle{0.45, 0.55, 0.25, 0.75}};
    case 5:
      // Two offset blocks.
      return {Rectangle{0.2, 0.4, 0.55, 0.75}, Rectangle{0.6, 0.8, 0.25, 0.45}};
    default:
      throw ConfigError(fmt::format("unknown building layout {}", index));
  }
}

}  // namespace mvoed
