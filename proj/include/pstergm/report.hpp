#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pstergm/error.hpp"
#include "pstergm/estimate.hpp"
#include "pstergm/gof.hpp"
#include "pstergm/model.hpp"

namespace pstergm {

namespace report_detail {

inline nlohmann::ordered_json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

inline nlohmann::ordered_json stage_json(const StageSchedule& s) {
  return {{"iterations", s.iterations}, {"samples", s.samples}, {"cd_steps", s.cd_steps}};
}

inline StageSchedule stage_from(const nlohmann::json& j) {
  return {j.at("iterations").get<std::size_t>(), j.at("samples").get<std::size_t>(),
          j.at("cd_steps").get<std::size_t>()};
}

inline std::string fixed(double v, int digits = 3) {
  if (!std::isfinite(v)) return "NA";
  if (std::fabs(v) < 0.5 * std::pow(10.0, -digits)) v = 0.0;  // no "-0.000"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace report_detail

// Fit result as JSON, including the resolved schedule and seed so a run can be repeated.
inline nlohmann::ordered_json fit_to_json(const FitResult& fit, bool with_trajectory = false) {
  using report_detail::number_or_null;
  nlohmann::ordered_json j;
  j["mode"] = fit.heterogeneous ? "heterogeneous" : "homogeneous";
  j["seed"] = fit.seed;
  j["aug_statistics"] = fit.aug_labels;
  j["dim_statistics"] = fit.dim_labels;
  auto& sj = j["schedule"];
  sj["partial_stepping"] = report_detail::stage_json(fit.schedule.partial_stepping);
  sj["newton"] = nlohmann::ordered_json::array();
  for (const auto& s : fit.schedule.newton) sj["newton"].push_back(report_detail::stage_json(s));
  sj["standard_errors"] = fit.schedule.standard_errors;
  sj["se_samples"] = fit.schedule.se_samples;
  sj["se_cd_steps"] = fit.schedule.se_cd_steps;
  if (fit.schedule.score_tolerance) sj["score_tolerance"] = *fit.schedule.score_tolerance;
  j["blocks"] = nlohmann::ordered_json::array();
  for (const auto& b : fit.blocks) {
    nlohmann::ordered_json bj;
    bj["first_t"] = b.first_t;
    bj["last_t"] = b.last_t;
    bj["m"] = b.caps;
    bj["eta_plus"] = b.eta.plus;
    bj["eta_minus"] = b.eta.minus;
    auto se = nlohmann::ordered_json::array();
    for (double v : b.std_errors) se.push_back(number_or_null(v));
    bj["std_errors"] = se;
    bj["fisher_positive_definite"] = b.fisher_positive_definite;
    if (with_trajectory) {
      auto traj = nlohmann::ordered_json::array();
      for (const auto& p : b.trajectory) {
        traj.push_back({{"stage", p.stage}, {"iteration", p.iteration}, {"eta", p.eta},
                        {"score_norm", number_or_null(p.score_norm)}});
      }
      bj["trajectory"] = traj;
    }
    j["blocks"].push_back(bj);
  }
  return j;
}

inline FitResult fit_from_json(const nlohmann::json& j) {
  FitResult fit;
  try {
    fit.heterogeneous = j.at("mode").get<std::string>() == "heterogeneous";
    fit.seed = j.at("seed").get<std::uint64_t>();
    fit.aug_labels = j.at("aug_statistics").get<std::vector<std::string>>();
    fit.dim_labels = j.at("dim_statistics").get<std::vector<std::string>>();
    const auto& sj = j.at("schedule");
    fit.schedule.partial_stepping = report_detail::stage_from(sj.at("partial_stepping"));
    fit.schedule.newton.clear();
    for (const auto& s : sj.at("newton")) fit.schedule.newton.push_back(report_detail::stage_from(s));
    fit.schedule.standard_errors = sj.at("standard_errors").get<bool>();
    fit.schedule.se_samples = sj.at("se_samples").get<std::size_t>();
    fit.schedule.se_cd_steps = sj.at("se_cd_steps").get<std::size_t>();
    for (const auto& bj : j.at("blocks")) {
      BlockFit b;
      b.first_t = bj.at("first_t").get<std::size_t>();
      b.last_t = bj.at("last_t").get<std::size_t>();
      b.caps = bj.at("m").get<std::vector<Count>>();
      b.eta.plus = bj.at("eta_plus").get<std::vector<double>>();
      b.eta.minus = bj.at("eta_minus").get<std::vector<double>>();
      for (const auto& v : bj.at("std_errors")) b.std_errors.push_back(v.is_null() ? NAN : v.get<double>());
      b.fisher_positive_definite = bj.at("fisher_positive_definite").get<bool>();
      fit.blocks.push_back(std::move(b));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("fit file: ") + e.what());
  }
  return fit;
}

// One row per statistic and one column per block, each cell "estimate (se)".
inline std::string parameter_table(const FitResult& fit) {
  std::string out;
  auto header = [&](const char* process) {
    out += std::string("statistic\t");
    for (std::size_t b = 0; b < fit.blocks.size(); ++b) {
      const auto& blk = fit.blocks[b];
      out += std::string("eta") + process;
      out += blk.first_t == blk.last_t ? "," + std::to_string(blk.first_t)
                                        : "," + std::to_string(blk.first_t) + ".." + std::to_string(blk.last_t);
      out += b + 1 < fit.blocks.size() ? "\t" : "\n";
    }
  };
  auto rows = [&](const std::vector<std::string>& labels, bool plus) {
    for (std::size_t k = 0; k < labels.size(); ++k) {
      out += labels[k] + "\t";
      for (std::size_t b = 0; b < fit.blocks.size(); ++b) {
        const auto& blk = fit.blocks[b];
        const std::size_t idx = plus ? k : blk.eta.plus.size() + k;
        const double est = plus ? blk.eta.plus[k] : blk.eta.minus[k];
        out += report_detail::fixed(est);
        if (idx < blk.std_errors.size()) out += " (" + report_detail::fixed(blk.std_errors[idx]) + ")";
        out += b + 1 < fit.blocks.size() ? "\t" : "\n";
      }
    }
  };
  header("+");
  rows(fit.aug_labels, true);
  out += "\n";
  header("-");
  rows(fit.dim_labels, false);
  return out;
}

namespace report_detail {

// Linear-interpolation quantile of sorted values.
inline double quantile_of(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::nan("");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline std::string summary(std::vector<double> samples, double tail) {
  std::sort(samples.begin(), samples.end());
  return fixed(quantile_of(samples, 0.5)) + "\t" + fixed(quantile_of(samples, tail)) + "\t" +
         fixed(quantile_of(samples, 1.0 - tail));
}

}  // namespace report_detail

// TSV with one row per (t, process, statistic) cell and a closing coverage line.
inline std::string gof_table(const GofReport& report) {
  std::string out = "t\tprocess\tstatistic\tobserved\tmedian\tlower\tupper\tquantile\tcovered\n";
  const double tail = (1.0 - report.band) / 2.0;
  for (const auto& c : report.cells) {
    out += std::to_string(c.t) + "\t" + process_name(c.process) + "\t" + c.statistic + "\t" +
           report_detail::fixed(c.observed) + "\t" + report_detail::summary(c.samples, tail) + "\t" +
           report_detail::fixed(c.quantile, 4) + "\t" + (c.covered ? "yes" : "no") + "\n";
  }
  const auto hit = std::count_if(report.cells.begin(), report.cells.end(), [](const GofCell& c) { return c.covered; });
  out += "# coverage " + std::to_string(hit) + "/" + std::to_string(report.cells.size()) + " = " +
         report_detail::fixed(report.coverage(), 4) + " at band " + report_detail::fixed(report.band, 2) + "\n";
  return out;
}

// Forecast summaries per (t, process, statistic); held-out times append the observed value.
inline std::string forecast_table(const ForecastResult& result, const std::vector<std::string>& aug_labels,
                                  const std::vector<std::string>& dim_labels, double band = 0.95) {
  std::string out = "t\tprocess\tstatistic\tmedian\tlower\tupper\tobserved\tquantile\tcovered\n";
  const double tail = (1.0 - band) / 2.0;
  const auto p = aug_labels.size() + dim_labels.size();
  for (const auto& step : result.steps) {
    for (std::size_t k = 0; k < p; ++k) {
      std::vector<double> values;
      for (const auto& g : step.statistics) values.push_back(g[static_cast<Eigen::Index>(k)]);
      const bool plus = k < aug_labels.size();
      out += std::to_string(step.t) + "\t" + (plus ? "aug" : "dim") + "\t" +
             (plus ? aug_labels[k] : dim_labels[k - aug_labels.size()]) + "\t" +
             report_detail::summary(values, tail);
      const GofCell* cell = nullptr;
      if (result.report) {
        for (const auto& c : result.report->cells) {
          if (c.t == step.t && c.statistic == (plus ? aug_labels[k] : dim_labels[k - aug_labels.size()]) &&
              c.process == (plus ? Process::augmentation : Process::diminution)) {
            cell = &c;
          }
        }
      }
      if (cell) {
        out += "\t" + report_detail::fixed(cell->observed) + "\t" + report_detail::fixed(cell->quantile, 4) + "\t" +
               (cell->covered ? "yes" : "no") + "\n";
      } else {
        out += "\tNA\tNA\tNA\n";
      }
    }
  }
  return out;
}

}  // namespace pstergm
