#include "mvoed/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "mvoed/benchmarks.hpp"
#include "mvoed/error.hpp"

namespace mvoed {
namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{} is not valid JSON: {}", what, e.what()));
  }
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigError(fmt::format("unknown key '{}{}'", where, key));
  }
}

template <typename T>
T get(const json& obj, const std::string& key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("bad value for key '{}{}': {}", where, key, e.what()));
  }
}

template <typename T>
void read_opt(const json& obj, const std::string& key, T& out, const std::string& where = "") {
  if (obj.contains(key)) out = get<T>(obj, key, where);
}

template <typename T>
void read_opt(const json& obj, const std::string& key, std::optional<T>& out,
              const std::string& where = "") {
  if (obj.contains(key)) out = get<T>(obj, key, where);
}

Rectangle rectangle_from(const json& j) {
  try {
    if (j.is_array()) {
      if (j.size() != 4) throw ConfigError("obstacle arrays need 4 numbers");
      return Rectangle{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                       j[3].get<double>()};
    }
    return Rectangle{j.at("xmin").get<double>(), j.at("xmax").get<double>(),
                     j.at("ymin").get<double>(), j.at("ymax").get<double>()};
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("malformed obstacle: {}", e.what()));
  }
}

std::vector<Rectangle> obstacles_from(const json& j) {
  const json& list = j.is_object() ? j.at("obstacles") : j;
  if (!list.is_array()) throw ConfigError("obstacles must be an array");
  std::vector<Rectangle> out;
  for (const auto& item : list) out.push_back(rectangle_from(item));
  validate_obstacles(out);
  return out;
}

Vector vector_from(const json& obj, const std::string& key, const std::string& where) {
  const auto values = get<std::vector<double>>(obj, key, where);
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::optional<std::size_t> diffusion_sensors(const std::string& name) {
  constexpr std::string_view prefix = "diffusion-";
  if (!name.starts_with(prefix) || !name.ends_with('s')) return std::nullopt;
  const std::string digits = name.substr(prefix.size(), name.size() - prefix.size() - 1);
  if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
    return std::nullopt;
  }
  const auto m = std::stoul(digits);
  if (m == 0) return std::nullopt;
  return m;
}

}  // namespace

std::vector<Rectangle> parse_obstacles(const std::string& json_text) {
  try {
    return obstacles_from(parse_json(json_text, "obstacle file"));
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("malformed obstacle file: {}", e.what()));
  }
}

std::vector<Rectangle> load_obstacles(const std::filesystem::path& path) {
  return parse_obstacles(read_file(path));
}

RunConfig parse_run_config(const std::string& json_text) {
  const json root = parse_json(json_text, "config");
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(root,
                 {"model", "noise_variance", "prior", "design_bounds", "lambda", "seed",
                  "estimator", "bo", "pde", "design", "output"},
                 "");
  RunConfig c;
  read_opt(root, "model", c.model.name);
  read_opt(root, "noise_variance", c.model.noise_variance);
  read_opt(root, "lambda", c.estimator.lambda);
  read_opt(root, "seed", c.seed);
  c.estimator.seed = c.seed;
  read_opt(root, "design", c.design);
  if (root.contains("output")) c.output = get<std::string>(root, "output", "");

  if (root.contains("prior")) {
    const json& p = root.at("prior");
    reject_unknown(p, {"mean", "sd"}, "prior.");
    read_opt(p, "mean", c.model.prior_mean, "prior.");
    read_opt(p, "sd", c.model.prior_sd, "prior.");
  }
  if (root.contains("design_bounds")) {
    const json& b = root.at("design_bounds");
    reject_unknown(b, {"lower", "upper"}, "design_bounds.");
    c.model.design_bounds =
        Box{vector_from(b, "lower", "design_bounds."), vector_from(b, "upper", "design_bounds.")};
  }
  if (root.contains("estimator")) {
    const json& e = root.at("estimator");
    reject_unknown(e, {"n", "m1", "m2", "reuse", "crs_seed", "max_dropped_fraction"},
                   "estimator.");
    if (e.contains("n")) {
      const auto n = get<std::size_t>(e, "n", "estimator.");
      c.estimator.n_outer = c.estimator.m1 = c.estimator.m2 = n;
    }
    read_opt(e, "m1", c.estimator.m1, "estimator.");
    read_opt(e, "m2", c.estimator.m2, "estimator.");
    read_opt(e, "reuse", c.estimator.reuse, "estimator.");
    read_opt(e, "crs_seed", c.estimator.crs_seed, "estimator.");
    read_opt(e, "max_dropped_fraction", c.estimator.max_dropped_fraction, "estimator.");
  }
  if (root.contains("bo")) {
    const json& b = root.at("bo");
    reject_unknown(b, {"init", "budget", "kappa", "acquisition"}, "bo.");
    read_opt(b, "init", c.bo_init, "bo.");
    read_opt(b, "budget", c.bo_budget, "bo.");
    read_opt(b, "kappa", c.kappa, "bo.");
    if (b.contains("acquisition")) {
      const auto a = get<std::string>(b, "acquisition", "bo.");
      if (a == "ucb") {
        c.acquisition = Acquisition::kUcb;
      } else if (a == "ei") {
        c.acquisition = Acquisition::kExpectedImprovement;
      } else {
        throw ConfigError(fmt::format("unknown acquisition '{}' (expected ucb or ei)", a));
      }
    }
  }
  if (root.contains("pde")) {
    const json& p = root.at("pde");
    reject_unknown(p,
                   {"cells", "dt", "final_time", "source_strength", "source_width", "resolution",
                    "cache", "obstacles", "layout"},
                   "pde.");
    read_opt(p, "cells", c.model.pde.cells, "pde.");
    read_opt(p, "dt", c.model.pde.dt, "pde.");
    read_opt(p, "final_time", c.model.pde.final_time, "pde.");
    read_opt(p, "source_strength", c.model.pde.source_strength, "pde.");
    read_opt(p, "source_width", c.model.pde.source_width, "pde.");
    read_opt(p, "resolution", c.model.surrogate_resolution, "pde.");
    if (p.contains("cache")) c.model.surrogate_cache = get<std::string>(p, "cache", "pde.");
    if (p.contains("layout") && p.contains("obstacles")) {
      throw ConfigError("give either 'pde.layout' or 'pde.obstacles', not both");
    }
    if (p.contains("layout")) c.model.pde.obstacles = building_layout(get<int>(p, "layout", "pde."));
    if (p.contains("obstacles")) {
      const json& o = p.at("obstacles");
      c.model.pde.obstacles = o.is_string() ? load_obstacles(o.get<std::string>()) : obstacles_from(o);
    }
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path));
}

std::vector<std::string> registered_models() {
  return {"lingauss-1d", "nonlinear-1d", "nonlinear-2d", "constant-1d", "diffusion-<m>s"};
}

Problem make_problem(const ModelConfig& config) {
  if (config.name.empty()) throw ConfigError("missing required key 'model'");
  const std::string& name = config.name;
  if (name == "lingauss-1d") {
    LinearGaussianSpec spec;
    if (config.prior_mean) spec.prior_mean = *config.prior_mean;
    if (config.prior_sd) spec.prior_var = *config.prior_sd * *config.prior_sd;
    if (config.noise_variance) spec.noise_var = *config.noise_variance;
    if (config.design_bounds) {
      if (config.design_bounds->dim() != 1) throw ConfigError("lingauss-1d has a 1D design");
      spec.design_lower = config.design_bounds->lower[0];
      spec.design_upper = config.design_bounds->upper[0];
    }
    return make_linear_gaussian_problem(spec);
  }
  if (config.prior_mean || config.prior_sd || config.design_bounds) {
    throw ConfigError(fmt::format("model '{}' has a fixed prior and design box", name));
  }
  if (name == "nonlinear-1d" || name == "nonlinear-2d") {
    NonlinearSpec spec;
    spec.design_dim = name == "nonlinear-1d" ? 1 : 2;
    if (config.noise_variance) spec.noise_var = *config.noise_variance;
    return make_nonlinear_problem(spec);
  }
  if (name == "constant-1d") return make_constant_problem();
  if (const auto sensors = diffusion_sensors(name)) {
    auto table = build_surrogate(config.pde, config.surrogate_resolution, config.surrogate_cache);
    return config.noise_variance ? make_diffusion_problem(table, *sensors, *config.noise_variance)
                                 : make_diffusion_problem(table, *sensors);
  }
  throw ConfigError(fmt::format("unknown model '{}' (known: lingauss-1d, nonlinear-1d, "
                                "nonlinear-2d, constant-1d, diffusion-<m>s)",
                                name));
}

}  // namespace mvoed
