#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pstergm/error.hpp"
#include "pstergm/estimate.hpp"
#include "pstergm/io.hpp"
#include "pstergm/model.hpp"
#include "pstergm/sampler.hpp"
#include "pstergm/stats.hpp"

namespace pstergm {

// Chain length written relative to the node count: "1000", "n", "5n", "25n^2", "20*n*n".
struct StepCount {
  double coefficient = 1;
  int power = 0;

  static StepCount parse(const std::string& text) {
    static const std::regex re(R"(^\s*(\d+(?:\.\d+)?)?\s*\*?\s*(n(?:\s*\^\s*(\d)|\s*\*\s*n)?)?\s*$)");
    std::smatch m;
    if (!std::regex_match(text, m, re) || (!m[1].matched && !m[2].matched)) {
      throw SpecError("bad step count '" + text + "'; expected forms like 1000, 5n or 25n^2");
    }
    StepCount k;
    k.coefficient = m[1].matched ? std::stod(m[1].str()) : 1.0;
    if (m[2].matched) k.power = m[3].matched ? std::stoi(m[3].str()) : (m[2].str().find('*') != std::string::npos ? 2 : 1);
    if (k.power > 3) throw SpecError("step count '" + text + "' has a power above 3");
    return k;
  }

  static StepCount from_json(const nlohmann::json& j) {
    if (j.is_number_unsigned() || j.is_number_integer()) {
      if (j.get<std::int64_t>() < 1) throw SpecError("step counts must be positive");
      return {static_cast<double>(j.get<std::int64_t>()), 0};
    }
    if (j.is_string()) return parse(j.get<std::string>());
    throw SpecError("step count must be a number or a string like \"5n\"");
  }

  std::size_t resolve(std::size_t n) const {
    const double v = std::round(coefficient * std::pow(static_cast<double>(n), power));
    if (!(v >= 1)) throw SpecError("step count resolves to less than one transition");
    return static_cast<std::size_t>(v);
  }
};

enum class SchedulePreset { contact, forecasting, simulation };

inline SchedulePreset parse_preset(const std::string& name) {
  if (name == "contact") return SchedulePreset::contact;
  if (name == "forecasting") return SchedulePreset::forecasting;
  if (name == "simulation") return SchedulePreset::simulation;
  throw SpecError("unknown schedule preset '" + name + "'; expected contact, forecasting or simulation");
}

struct StageConfig {
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> samples;
  std::optional<StepCount> cd_steps;

  StageSchedule over(StageSchedule base, std::size_t n) const {
    if (iterations) base.iterations = *iterations;
    if (samples) base.samples = *samples;
    if (cd_steps) base.cd_steps = cd_steps->resolve(n);
    return base;
  }
};

// Schedule as written in a config: a preset sized by n, with optional overrides.
struct ScheduleConfig {
  SchedulePreset preset = SchedulePreset::simulation;
  std::optional<StageConfig> partial_stepping;
  std::optional<std::vector<StageConfig>> newton;  // replaces the preset's Newton phases
  std::optional<bool> standard_errors;
  std::optional<std::size_t> se_samples;
  std::optional<StepCount> se_cd_steps;
  std::optional<ParamVector> eta0;
  std::optional<double> score_tolerance;

  FitSchedule resolve(std::size_t n) const {
    FitSchedule s = preset == SchedulePreset::contact       ? FitSchedule::contact(n)
                    : preset == SchedulePreset::forecasting ? FitSchedule::forecasting(n)
                                                            : FitSchedule::simulation(n);
    if (partial_stepping) s.partial_stepping = partial_stepping->over(s.partial_stepping, n);
    if (newton) {
      std::vector<StageSchedule> phases;
      for (std::size_t k = 0; k < newton->size(); ++k) {
        const StageSchedule base = k < s.newton.size() ? s.newton[k] : s.newton.back();
        phases.push_back((*newton)[k].over(base, n));
      }
      s.newton = std::move(phases);
    }
    if (standard_errors) s.standard_errors = *standard_errors;
    if (se_samples) s.se_samples = *se_samples;
    if (se_cd_steps) s.se_cd_steps = se_cd_steps->resolve(n);
    s.eta0 = eta0;
    s.score_tolerance = score_tolerance;
    s.validate();
    return s;
  }
};

struct SampleConfig {
  std::size_t count = 100;
  StepCount cd_steps{200, 2};
  double band = 0.95;
};

struct ForecastConfig : SampleConfig {
  std::vector<std::size_t> times;
  bool chained = false;
};

struct SimulateConfig {
  std::size_t nodes = 50;
  std::size_t length = 2;  // T
  Orientation orientation = Orientation::directed;
  ParamVector eta;
  StepCount cd_steps{20, 2};
  std::string first = "simulate";  // y^1: "simulate" from an empty network, or "ones"
};

struct RunConfig {
  std::filesystem::path base_dir;  // relative paths resolve against this
  std::string series;
  ModelSpec model;
  ScheduleConfig schedule;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  SampleConfig gof;
  ForecastConfig forecast;
  SimulateConfig simulate;
  std::string output;
  std::optional<std::size_t> fit_until;  // fit on y^1..y^fit_until only

  std::filesystem::path resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  }
};

namespace config_detail {

inline std::vector<StatisticSpec> stat_list(const nlohmann::json& j) {
  std::vector<StatisticSpec> out;
  for (const auto& item : j) out.push_back(parse_statistic(item.get<std::string>()));
  return out;
}

inline std::vector<double> number_list(const nlohmann::json& j) {
  if (j.is_string()) {
    std::vector<double> out;
    std::string text = j.get<std::string>();
    std::size_t start = 0;
    while (start <= text.size()) {
      auto end = text.find(',', start);
      if (end == std::string::npos) end = text.size();
      const auto cell = io_detail::trim(std::string_view(text).substr(start, end - start));
      double v = 0;
      if (!io_detail::parse_number(cell, v)) throw SpecError("bad number '" + std::string(cell) + "'");
      out.push_back(v);
      start = end + 1;
    }
    return out;
  }
  return j.get<std::vector<double>>();
}

inline StageConfig stage(const nlohmann::json& j) {
  StageConfig s;
  if (j.contains("iterations")) s.iterations = j["iterations"].get<std::size_t>();
  if (j.contains("samples")) s.samples = j["samples"].get<std::size_t>();
  if (j.contains("cd_steps")) s.cd_steps = StepCount::from_json(j["cd_steps"]);
  return s;
}

inline ParamVector eta(const nlohmann::json& j) {
  ParamVector p;
  p.plus = number_list(j.at("plus"));
  p.minus = number_list(j.at("minus"));
  return p;
}

inline void sample(const nlohmann::json& j, SampleConfig& s) {
  if (j.contains("count")) s.count = j["count"].get<std::size_t>();
  if (j.contains("cd_steps")) s.cd_steps = StepCount::from_json(j["cd_steps"]);
  if (j.contains("band")) s.band = j["band"].get<double>();
  if (!(s.band > 0 && s.band < 1)) throw SpecError("coverage band must lie in (0, 1)");
}

}  // namespace config_detail

inline Orientation parse_orientation(const std::string& name) {
  if (name == "directed") return Orientation::directed;
  if (name == "undirected") return Orientation::undirected;
  throw SpecError("orientation must be 'directed' or 'undirected', got '" + name + "'");
}

// Parses a run configuration. Keys not listed in the README are rejected so
// typos surface before a long run starts.
inline RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  static const std::vector<std::string> known{"series", "model", "schedule", "seed", "threads", "gof",
                                              "forecast", "simulate", "output", "fit_until", "comment"};
  RunConfig cfg;
  cfg.base_dir = base_dir;
  try {
    if (!j.is_object()) throw SpecError("config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) throw SpecError("unknown config key '" + key + "'");
    }
    if (j.contains("series")) cfg.series = j["series"].get<std::string>();
    if (j.contains("output")) cfg.output = j["output"].get<std::string>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<std::size_t>();
    if (j.contains("fit_until")) cfg.fit_until = j["fit_until"].get<std::size_t>();

    if (j.contains("model")) {
      const auto& mj = j["model"];
      cfg.model.aug_stats = config_detail::stat_list(mj.at("aug"));
      cfg.model.dim_stats = mj.contains("dim") ? config_detail::stat_list(mj["dim"]) : cfg.model.aug_stats;
      if (mj.contains("m")) {
        const auto& m = mj["m"];
        if (m.is_string()) {
          if (m.get<std::string>() != "per-interval") throw SpecError("model.m must be an integer or \"per-interval\"");
        } else if (!m.is_null()) {
          cfg.model.m = m.get<Count>();
        }
      }
      if (mj.contains("pi0")) cfg.model.pi0 = mj["pi0"].get<double>();
      if (mj.contains("mode")) {
        const auto mode = mj["mode"].get<std::string>();
        if (mode != "homogeneous" && mode != "heterogeneous") {
          throw SpecError("model.mode must be homogeneous or heterogeneous");
        }
        cfg.model.heterogeneous = mode == "heterogeneous";
      }
      cfg.model.validate();
    }

    if (j.contains("schedule")) {
      const auto& sj = j["schedule"];
      auto& s = cfg.schedule;
      if (sj.contains("preset")) s.preset = parse_preset(sj["preset"].get<std::string>());
      if (sj.contains("partial_stepping")) s.partial_stepping = config_detail::stage(sj["partial_stepping"]);
      if (sj.contains("newton")) {
        std::vector<StageConfig> phases;
        for (const auto& p : sj["newton"]) phases.push_back(config_detail::stage(p));
        if (phases.empty()) throw SpecError("schedule.newton needs at least one phase");
        s.newton = std::move(phases);
      }
      if (sj.contains("standard_errors")) {
        const auto& se = sj["standard_errors"];
        if (se.is_boolean()) {
          s.standard_errors = se.get<bool>();
        } else {
          s.standard_errors = true;
          if (se.contains("samples")) s.se_samples = se["samples"].get<std::size_t>();
          if (se.contains("cd_steps")) s.se_cd_steps = StepCount::from_json(se["cd_steps"]);
        }
      }
      if (sj.contains("eta0")) s.eta0 = config_detail::eta(sj["eta0"]);
      if (sj.contains("score_tolerance")) s.score_tolerance = sj["score_tolerance"].get<double>();
    }

    if (j.contains("gof")) config_detail::sample(j["gof"], cfg.gof);
    if (j.contains("forecast")) {
      const auto& fj = j["forecast"];
      config_detail::sample(fj, cfg.forecast);
      if (fj.contains("times")) cfg.forecast.times = fj["times"].get<std::vector<std::size_t>>();
      if (fj.contains("chained")) cfg.forecast.chained = fj["chained"].get<bool>();
    }
    if (j.contains("simulate")) {
      const auto& sj = j["simulate"];
      auto& s = cfg.simulate;
      if (sj.contains("nodes")) s.nodes = sj["nodes"].get<std::size_t>();
      if (sj.contains("T")) s.length = sj["T"].get<std::size_t>();
      if (sj.contains("orientation")) s.orientation = parse_orientation(sj["orientation"].get<std::string>());
      if (sj.contains("eta")) s.eta = config_detail::eta(sj["eta"]);
      if (sj.contains("cd_steps")) s.cd_steps = StepCount::from_json(sj["cd_steps"]);
      if (sj.contains("first")) {
        s.first = sj["first"].get<std::string>();
        if (s.first != "simulate" && s.first != "ones") throw SpecError("simulate.first must be simulate or ones");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("config: ") + e.what());
  }
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io_detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecError(path.string() + ": " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

// Binds every statistic against the series so missing attributes or
// covariates fail before any sampling starts.
inline void check_model_against(const ModelSpec& spec, const NetworkSeries& series) {
  spec.validate();
  const BoundModel bound(spec, series.covariates, series.node_count(), series.orientation());
  (void)bound;
}

}  // namespace pstergm
