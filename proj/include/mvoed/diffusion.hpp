#pragma once

// 2D diffusion with a Gaussian point-like source on the unit square:
//
//   dG/dt = lap(G) + s / (2 pi h^2) exp(-|theta - z|^2 / (2 h^2)),  G(z, 0) = 0,
//
// with zero normal flux on the outer boundary and on obstacle faces.
// Cell-centered finite volumes, Strang-split Crank-Nicolson in time
// (x half step, y full step carrying the source, x half step).

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "mvoed/problem.hpp"

namespace mvoed {

struct PdeConfig {
  int cells = 100;  // per axis; spacing 1 / cells
  double dt = 5e-4;
  double final_time = 0.16;
  double source_strength = 2.0;
  double source_width = 0.05;
  std::vector<Rectangle> obstacles;

  double spacing() const { return 1.0 / cells; }
  int steps() const;
  /// FNV-1a of a canonical text rendering of every field.
  std::uint64_t hash() const;
  void validate() const;
};

/// Cell-centered concentration field. values(i, j) is the cell with center
/// ((i + 1/2) h, (j + 1/2) h). Masked (obstacle) cells are held at zero.
class DiffusionField {
 public:
  DiffusionField() = default;
  DiffusionField(Matrix values, Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask);

  int nx() const { return static_cast<int>(values_.rows()); }
  int ny() const { return static_cast<int>(values_.cols()); }
  double spacing() const { return 1.0 / nx(); }
  const Matrix& values() const { return values_; }
  Matrix& values() { return values_; }
  const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& mask() const { return mask_; }
  bool masked(int i, int j) const { return mask_(i, j); }

  /// Integral of G over the domain (sum of cell values times cell area).
  double total_mass() const;
  /// Bilinear interpolation of cell-center values at (x, y). Points closer
  /// than half a cell to the boundary use the nearest cell row/column.
  /// Masked neighbours are dropped and the weights renormalized.
  double interpolate(double x, double y) const;

 private:
  Matrix values_;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask_;
};

class DiffusionSolver {
 public:
  explicit DiffusionSolver(PdeConfig config);

  const PdeConfig& config() const { return config_; }
  DiffusionField zero_field() const;
  /// Source term sampled at cell centers, zero in masked cells.
  Matrix source_term(double theta_x, double theta_y) const;
  /// One Strang step of size dt.
  void step(DiffusionField& field, const Matrix& source, double dt) const;
  /// Advances `steps` steps of size dt.
  void advance(DiffusionField& field, const Matrix& source, int steps, double dt) const;
  /// Field at the configured final time from a zero initial condition.
  DiffusionField solve(double theta_x, double theta_y) const;

 private:
  // One run of consecutive open cells along a grid line.
  struct Segment {
    int line = 0;
    int start = 0;
    int length = 0;
  };
  // Pre-eliminated Thomas factors of (I - r L) for one segment length.
  struct SegmentFactor {
    std::vector<double> multiplier;
    std::vector<double> inverse_pivot;
  };
  struct SweepFactors {
    double r = 0.0;
    std::map<int, SegmentFactor> by_length;
  };

  SweepFactors make_factors(const std::vector<Segment>& segments, double tau) const;
  // CN sweep along every segment: (I - r L) out = (I + r L) in + tau * source.
  void sweep(Matrix& g, const std::vector<Segment>& segments, const SweepFactors& factors,
             const Matrix* source, double tau) const;

  PdeConfig config_;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask_;
  std::vector<Segment> x_segments_;  // lines are columns of the field (fixed j)
  std::vector<Segment> y_segments_;  // lines are columns of the transposed field
  SweepFactors half_x_;
  SweepFactors full_y_;
};

DiffusionField solve_diffusion(double theta_x, double theta_y, const PdeConfig& config);

/// Rasterized obstacle mask: a cell is masked when its center lies in an obstacle.
Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> obstacle_mask(const PdeConfig& config);

/// Solver output at the final time for a uniform lattice of source
/// locations theta_a = a / (resolution - 1) on [0, 1]^2; queries are
/// bilinear in theta and bilinear in z.
class SurrogateTable {
 public:
  SurrogateTable(PdeConfig config, int resolution, std::vector<DiffusionField> fields);

  const PdeConfig& config() const { return config_; }
  int resolution() const { return resolution_; }
  /// Field stored for lattice node (a, b), theta = (a, b) / (resolution - 1).
  const DiffusionField& field(int a, int b) const {
    return fields_[static_cast<std::size_t>(b * resolution_ + a)];
  }
  double lattice_coordinate(int a) const { return static_cast<double>(a) / (resolution_ - 1); }

  /// G(z, T; theta) by bilinear interpolation in theta of the bilinear
  /// field interpolants at z.
  double evaluate(double theta_x, double theta_y, double z_x, double z_y) const;

 private:
  PdeConfig config_;
  int resolution_;
  std::vector<DiffusionField> fields_;
};

/// Runs the solver at every lattice node. Loads `cache_path` instead when it
/// holds a table with the same config hash and resolution, and writes the
/// table there after building otherwise.
std::shared_ptr<const SurrogateTable> build_surrogate(
    const PdeConfig& config, int resolution,
    const std::optional<std::filesystem::path>& cache_path = std::nullopt);

/// Binary cache: magic "MVOEDSRG", u32 version, u64 config hash,
/// u32 resolution, u32 nx, u32 ny, then resolution^2 * nx * ny
/// little-endian float64 values (lattice node b-major, then a; field
/// column-major, x fastest).
void save_surrogate(const SurrogateTable& table, const std::filesystem::path& path);
std::shared_ptr<const SurrogateTable> load_surrogate(const std::filesystem::path& path,
                                                     const PdeConfig& config);
/// Header of a cache file without loading the payload.
struct SurrogateHeader {
  std::uint32_t version = 0;
  std::uint64_t config_hash = 0;
  std::uint32_t resolution = 0;
  std::uint32_t nx = 0;
  std::uint32_t ny = 0;
};
SurrogateHeader read_surrogate_header(const std::filesystem::path& path);

/// Observation means for sensors at (sensors[2k], sensors[2k + 1]).
/// Throws std::invalid_argument for a sensor inside an obstacle.
Vector surrogate_forward(const SurrogateTable& table, const ConstVectorRef& theta,
                         const ConstVectorRef& sensors);

/// Uniform prior on [0, 1]^2 with zero density inside the obstacles.
std::shared_ptr<const UniformPrior> masked_prior_sampler(const std::vector<Rectangle>& obstacles);

/// Forward model backed by a surrogate table; m sensors, design in [0,1]^{2m}.
class SurrogateForwardModel final : public ForwardModel {
 public:
  SurrogateForwardModel(std::shared_ptr<const SurrogateTable> table, std::size_t sensors);
  std::size_t parameter_dim() const override { return 2; }
  std::size_t design_dim() const override { return 2 * sensors_; }
  std::size_t observation_dim() const override { return sensors_; }
  void evaluate(const ConstVectorRef& theta, const ConstVectorRef& design,
                VectorRef out) const override;

 private:
  std::shared_ptr<const SurrogateTable> table_;
  std::size_t sensors_;
};

/// Forward model that runs the full solver per call (slow; reference use).
class DirectDiffusionModel final : public ForwardModel {
 public:
  DirectDiffusionModel(PdeConfig config, std::size_t sensors);
  std::size_t parameter_dim() const override { return 2; }
  std::size_t design_dim() const override { return 2 * sensors_; }
  std::size_t observation_dim() const override { return sensors_; }
  void evaluate(const ConstVectorRef& theta, const ConstVectorRef& design,
                VectorRef out) const override;

 private:
  DiffusionSolver solver_;
  std::size_t sensors_;
};

/// Source-inversion problem: masked uniform prior, surrogate forward model,
/// i.i.d. noise of the given variance per sensor, sensors kept out of obstacles.
Problem make_diffusion_problem(std::shared_ptr<const SurrogateTable> table, std::size_t sensors,
                               double noise_var = 0.05 * 0.05);

/// Two qualitative building layouts used by the examples.
std::vector<Rectangle> building_layout(int index);

}  // namespace mvoed
