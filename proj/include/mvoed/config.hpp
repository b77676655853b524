#pragma once

// Run configuration: a JSON file whose keys can be overridden by command-line
// flags, plus the registry that turns a model description into a Problem.
//
// {
//   "model": "nonlinear-1d",
//   "noise_variance": 1e-4,
//   "prior": {"mean": 0.0, "sd": 3.0},
//   "design_bounds": {"lower": [0.0], "upper": [3.0]},
//   "lambda": 1.0,
//   "seed": 7,
//   "design": [0.2],
//   "estimator": {"n": 10000, "m1": 10000, "m2": 10000, "reuse": true, "crs_seed": 11},
//   "bo": {"init": 5, "budget": 25, "kappa": 2.0, "acquisition": "ucb"},
//   "pde": {"cells": 100, "dt": 5e-4, "final_time": 0.16, "resolution": 21,
//           "cache": "table.bin", "obstacles": "buildings.json"},
//   "output": "out.csv"
// }
//
// "pde.obstacles" is a file name or an inline list; "pde.layout" (4 or 5)
// selects a built-in building layout instead.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mvoed/bayes_opt.hpp"
#include "mvoed/diffusion.hpp"
#include "mvoed/estimators.hpp"
#include "mvoed/problem.hpp"

namespace mvoed {

struct ModelConfig {
  std::string name;  // empty means "not given"
  std::optional<double> noise_variance;
  std::optional<double> prior_mean;  // linear-Gaussian only
  std::optional<double> prior_sd;    // linear-Gaussian only
  std::optional<Box> design_bounds;  // linear-Gaussian only
  PdeConfig pde;
  int surrogate_resolution = 21;
  std::optional<std::filesystem::path> surrogate_cache;
};

struct RunConfig {
  ModelConfig model;
  EstimatorConfig estimator;
  std::size_t bo_init = 5;
  std::size_t bo_budget = 25;
  double kappa = 2.0;
  Acquisition acquisition = Acquisition::kUcb;
  std::uint64_t seed = 0;
  std::optional<std::vector<double>> design;
  std::optional<std::filesystem::path> output;
};

/// Parses JSON text. Unknown top-level keys are rejected. Throws ConfigError.
RunConfig parse_run_config(const std::string& json_text);
/// Reads and parses a config file. Throws IoError if it cannot be read.
RunConfig load_run_config(const std::filesystem::path& path);

/// Obstacle file: {"obstacles": [{"xmin":..,"xmax":..,"ymin":..,"ymax":..}, ...]}
/// or a bare array of such objects or of [xmin, xmax, ymin, ymax] arrays.
std::vector<Rectangle> parse_obstacles(const std::string& json_text);
std::vector<Rectangle> load_obstacles(const std::filesystem::path& path);

/// Names accepted by make_problem.
std::vector<std::string> registered_models();

/// Builds the named problem. Diffusion models ("diffusion-<m>s") build or
/// load their surrogate table. Throws ConfigError for an unknown or
/// missing name.
Problem make_problem(const ModelConfig& config);

}  // namespace mvoed
