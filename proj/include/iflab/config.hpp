#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "iflab/archetype.hpp"
#include "iflab/grid.hpp"
#include "iflab/io.hpp"
#include "iflab/potential.hpp"

namespace iflab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ArchetypeSpec {
  std::string kind = "tent";  // tent | indicator-cube | indicator-left | custom
  std::string file;           // custom table path
};

struct ModelSpec {
  std::string kind = "bridge";  // random-walk | bridge | membrane
  std::vector<int> N = {16};
  std::string alpha_rule = "2N^2";
};

struct PotentialSpec {
  std::string smooth = "zero";
  double amplitude = 1.0;
  double scale = 1.0;
  std::vector<Step> steps;
};

struct PinningSpec {
  double beta = 1.0;
  int count = 800;
  int thin_sweeps = 0;  // 0: scale with N
  int burnin_sweeps = 500;
};

struct SamplerSpec {
  std::string method = "auto";  // auto | importance | mcmc
  int count = 2000;
  int burnin = 2000;
  int thin = 10;
  double step_scale = 0.5;
};

struct SdeSpec {
  double dt = 2e-3;
  double horizon = 1.0;
  int replicas = 2000;
  std::vector<double> output_times = {0.0};
  double noise_scale = 1.0;
};

struct AnalysisSpec {
  int projections = 5;
  int permutations = 200;
  std::vector<double> lags;
  int mesh = 1024;
  int modes = 8;
  std::vector<double> eps = {0.02, 0.04, 0.08, 0.16};
  std::vector<double> test_points;
  double level = 0.1;
  std::vector<int> envelope_m = {4, 8, 16, 32};
};

struct RunConfig {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string format = "csv";  // csv | binary (ensemble payloads)
  Domain domain = Domain::unit_interval(GridRule::OpenInterior);
  ArchetypeSpec archetype, archetype_b{.kind = "indicator-cube"};
  ModelSpec model;
  PotentialSpec potential;
  PinningSpec pinning;
  SamplerSpec sampler;
  SdeSpec sde;
  AnalysisSpec analysis;
  int workers = 1;

  std::string raw;   // config file bytes
  std::string hash;  // FNV-1a of raw
};

namespace detail {

using nlohmann::json;

template <class T>
T get_field(const json& j, const std::string& ctx, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config field '" + ctx + "." + key + "': " + e.what());
  }
}

inline const json& get_section(const json& j, const char* key,
                               const json& empty) {
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object())
    throw ConfigError(std::string("config section '") + key +
                      "' must be an object");
  return j.at(key);
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be an object");
  static const json empty = json::object();

  RunConfig cfg;
  cfg.raw = text;
  cfg.hash = fnv1a_hex(text);

  if (!j.contains("scenario") || !j.at("scenario").is_string())
    throw ConfigError("config: 'scenario' (string) is required");
  cfg.scenario = j.at("scenario").get<std::string>();
  if (!j.contains("seed") || !j.at("seed").is_number())
    throw ConfigError("config: 'seed' (integer) is required; no wall-clock defaults");
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.workers = detail::get_field(j, "", "workers", 1);
  if (cfg.workers < 1) throw ConfigError("config: workers must be >= 1");

  {
    const json& o = detail::get_section(j, "output", empty);
    cfg.out_dir = detail::get_field(o, "output", "dir", std::string("out"));
    cfg.format = detail::get_field(o, "output", "format", std::string("csv"));
    if (cfg.format != "csv" && cfg.format != "binary")
      throw ConfigError("config: output.format must be 'csv' or 'binary'");
  }
  {
    const json& o = detail::get_section(j, "domain", empty);
    const int dim = detail::get_field(o, "domain", "dim", 1);
    if (dim < 1 || dim > 2)
      throw ConfigError("config: domain.dim must be 1 or 2");
    cfg.domain.dim = dim;
    std::vector<double> lo = detail::get_field(o, "domain", "lo",
                                               std::vector<double>(dim, 0.0));
    std::vector<double> hi = detail::get_field(o, "domain", "hi",
                                               std::vector<double>(dim, 1.0));
    if (int(lo.size()) != dim || int(hi.size()) != dim)
      throw ConfigError("config: domain.lo/hi must have 'dim' entries");
    cfg.domain.lo = Eigen::Map<Eigen::VectorXd>(lo.data(), dim);
    cfg.domain.hi = Eigen::Map<Eigen::VectorXd>(hi.data(), dim);
    const std::string rule = detail::get_field(
        o, "domain", "rule",
        std::string(dim == 2 ? "interior-margin" : "open-interior"));
    try {
      cfg.domain.rule = grid_rule_from_string(rule);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: domain.rule: ") + e.what());
    }
    cfg.domain.margin = detail::get_field(o, "domain", "margin", 2);
    try {
      cfg.domain.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: domain: ") + e.what());
    }
  }
  auto parse_arch = [&](const char* key, ArchetypeSpec fallback) {
    const json& o = detail::get_section(j, key, empty);
    ArchetypeSpec s = fallback;
    s.kind = detail::get_field(o, key, "kind", fallback.kind);
    s.file = detail::get_field(o, key, "file", std::string());
    if (s.kind != "tent" && s.kind != "indicator-cube" &&
        s.kind != "indicator-left" && s.kind != "custom")
      throw ConfigError(std::string("config: ") + key + ".kind unknown: " +
                        s.kind);
    if (s.kind == "custom" && s.file.empty())
      throw ConfigError(std::string("config: ") + key +
                        ".file required for custom kernels");
    return s;
  };
  cfg.archetype = parse_arch("archetype", ArchetypeSpec{});
  cfg.archetype_b =
      parse_arch("archetype_b", ArchetypeSpec{.kind = "indicator-cube"});
  {
    const json& o = detail::get_section(j, "model", empty);
    cfg.model.kind = detail::get_field(o, "model", "kind", std::string("bridge"));
    if (cfg.model.kind != "random-walk" && cfg.model.kind != "bridge" &&
        cfg.model.kind != "membrane" && cfg.model.kind != "pinning")
      throw ConfigError("config: model.kind unknown: " + cfg.model.kind);
    cfg.model.N = detail::get_field(o, "model", "N", std::vector<int>{16});
    if (cfg.model.N.empty())
      throw ConfigError("config: model.N must be a nonempty list");
    for (int n : cfg.model.N)
      if (n < 1) throw ConfigError("config: model.N entries must be positive");
    cfg.model.alpha_rule =
        detail::get_field(o, "model", "alpha_rule", std::string("2N^2"));
  }
  {
    const json& o = detail::get_section(j, "potential", empty);
    cfg.potential.smooth =
        detail::get_field(o, "potential", "smooth", std::string("zero"));
    cfg.potential.amplitude =
        detail::get_field(o, "potential", "amplitude", 1.0);
    cfg.potential.scale = detail::get_field(o, "potential", "scale", 1.0);
    if (o.contains("steps")) {
      if (!o.at("steps").is_array())
        throw ConfigError("config: potential.steps must be an array");
      for (const auto& s : o.at("steps")) {
        Step st;
        st.level = detail::get_field(s, "potential.steps[]", "level", 0.0);
        st.jump = detail::get_field(s, "potential.steps[]", "jump", 1.0);
        cfg.potential.steps.push_back(st);
      }
    }
  }
  {
    const json& o = detail::get_section(j, "pinning", empty);
    cfg.pinning.beta = detail::get_field(o, "pinning", "beta", 1.0);
    cfg.pinning.count = detail::get_field(o, "pinning", "count", 800);
    cfg.pinning.thin_sweeps = detail::get_field(o, "pinning", "thin_sweeps", 0);
    cfg.pinning.burnin_sweeps =
        detail::get_field(o, "pinning", "burnin_sweeps", 500);
    if (cfg.pinning.beta < 0.0)
      throw ConfigError("config: pinning.beta must be >= 0");
  }
  {
    const json& o = detail::get_section(j, "sampler", empty);
    cfg.sampler.method =
        detail::get_field(o, "sampler", "method", std::string("auto"));
    cfg.sampler.count = detail::get_field(o, "sampler", "count", 2000);
    cfg.sampler.burnin = detail::get_field(o, "sampler", "burnin", 2000);
    cfg.sampler.thin = detail::get_field(o, "sampler", "thin", 10);
    cfg.sampler.step_scale =
        detail::get_field(o, "sampler", "step_scale", 0.5);
    if (cfg.sampler.count < 1)
      throw ConfigError("config: sampler.count must be >= 1");
  }
  {
    const json& o = detail::get_section(j, "sde", empty);
    cfg.sde.dt = detail::get_field(o, "sde", "dt", 2e-3);
    cfg.sde.horizon = detail::get_field(o, "sde", "horizon", 1.0);
    cfg.sde.replicas = detail::get_field(o, "sde", "replicas", 2000);
    cfg.sde.output_times = detail::get_field(o, "sde", "output_times",
                                             std::vector<double>{0.0});
    cfg.sde.noise_scale = detail::get_field(o, "sde", "noise_scale", 1.0);
    if (cfg.sde.dt <= 0.0) throw ConfigError("config: sde.dt must be positive");
  }
  {
    const json& o = detail::get_section(j, "analysis", empty);
    cfg.analysis.projections =
        detail::get_field(o, "analysis", "projections", 5);
    cfg.analysis.permutations =
        detail::get_field(o, "analysis", "permutations", 200);
    cfg.analysis.lags =
        detail::get_field(o, "analysis", "lags", std::vector<double>{});
    cfg.analysis.mesh = detail::get_field(o, "analysis", "mesh", 1024);
    cfg.analysis.modes = detail::get_field(o, "analysis", "modes", 8);
    cfg.analysis.eps = detail::get_field(
        o, "analysis", "eps", std::vector<double>{0.02, 0.04, 0.08, 0.16});
    cfg.analysis.test_points = detail::get_field(o, "analysis", "test_points",
                                                 std::vector<double>{});
    cfg.analysis.level = detail::get_field(o, "analysis", "level", 0.1);
    cfg.analysis.envelope_m = detail::get_field(o, "analysis", "envelope_m",
                                                std::vector<int>{4, 8, 16, 32});
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path))
    throw ConfigError("config file not found: " + path.string());
  RunConfig cfg = parse_config(read_file(path));
  // resolve a relative custom-kernel table next to the config file
  for (ArchetypeSpec* spec : {&cfg.archetype, &cfg.archetype_b}) {
    if (spec->kind == "custom") {
      std::filesystem::path f = spec->file;
      if (f.is_relative()) f = path.parent_path() / f;
      if (!std::filesystem::is_regular_file(f))
        throw ConfigError("archetype table not found: " + f.string());
      spec->file = f.string();
    }
  }
  return cfg;
}

inline Archetype make_archetype_from(const ArchetypeSpec& spec, int dim) {
  if (spec.kind == "tent") return tent(dim);
  if (spec.kind == "indicator-cube") return indicator_cube(dim);
  if (spec.kind == "indicator-left") return indicator_left(dim);
  Archetype a = load_archetype_table(spec.file);
  if (a.dim != dim)
    throw ConfigError("archetype table dimension does not match the domain");
  return a;
}

inline Potential make_potential_from(const PotentialSpec& spec) {
  return make_potential(
      SmoothPart::named(spec.smooth, spec.amplitude, spec.scale), spec.steps);
}

// "2N^2", "N^2", "N^3", "0.5N^2" or a plain number
inline double alpha_from_rule(const std::string& rule, int N) {
  const std::size_t pos = rule.find('N');
  if (pos == std::string::npos) return std::stod(rule);
  double coef = 1.0;
  if (pos > 0) coef = std::stod(rule.substr(0, pos));
  double power = 1.0;
  if (pos + 1 < rule.size()) {
    if (rule[pos + 1] != '^')
      throw ConfigError("model.alpha_rule: expected 'cN^p' or a number");
    power = std::stod(rule.substr(pos + 2));
  }
  return coef * std::pow(double(N), power);
}

}  // namespace iflab
