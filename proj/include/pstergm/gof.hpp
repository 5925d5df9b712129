#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pstergm/dynamics.hpp"
#include "pstergm/error.hpp"
#include "pstergm/estimate.hpp"
#include "pstergm/model.hpp"
#include "pstergm/random.hpp"
#include "pstergm/sampler.hpp"

namespace pstergm {

enum class Process { augmentation, diminution };

inline const char* process_name(Process p) { return p == Process::augmentation ? "aug" : "dim"; }

// Position of `observed` within `samples`: (below + ties/2 + 1/2) / (count + 1).
// Never reaches 0 or 1; a tie with every sample gives 1/2.
inline double observed_quantile(const std::vector<double>& samples, double observed) {
  double below = 0;
  double ties = 0;
  for (double v : samples) {
    if (v < observed) below += 1;
    else if (v == observed) ties += 1;
  }
  return (below + 0.5 * ties + 0.5) / (static_cast<double>(samples.size()) + 1.0);
}

inline bool within_band(double quantile, double band) {
  // The slack absorbs rounding in (1 - band) / 2 so that a quantile exactly on the edge counts.
  const double tail = (1.0 - band) / 2.0 - 1e-12;
  return quantile >= tail && quantile <= 1.0 - tail;
}

struct GofCell {
  std::size_t t = 0;
  Process process = Process::augmentation;
  std::string statistic;
  std::vector<double> samples;
  double observed = 0;
  double quantile = 0;
  bool covered = false;
};

struct GofReport {
  double band = 0.95;
  std::vector<GofCell> cells;

  double coverage() const {
    if (cells.empty()) return 0.0;
    const auto hit = std::count_if(cells.begin(), cells.end(), [](const GofCell& c) { return c.covered; });
    return static_cast<double>(hit) / static_cast<double>(cells.size());
  }
};

namespace detail {

// Appends one cell per (process, statistic) given the statistics of networks sampled at time t.
inline void add_cells(GofReport& report, std::size_t t, const BoundModel& model,
                      const std::vector<Eigen::VectorXd>& stats, const Eigen::VectorXd& observed) {
  const auto p_plus = model.p_plus();
  const auto aug_labels = model.aug.labels();
  const auto dim_labels = model.dim.labels();
  for (std::size_t k = 0; k < model.p(); ++k) {
    GofCell cell;
    cell.t = t;
    cell.process = k < p_plus ? Process::augmentation : Process::diminution;
    cell.statistic = k < p_plus ? aug_labels[k] : dim_labels[k - p_plus];
    for (const auto& g : stats) cell.samples.push_back(g[static_cast<Eigen::Index>(k)]);
    cell.observed = observed[static_cast<Eigen::Index>(k)];
    cell.quantile = observed_quantile(cell.samples, cell.observed);
    cell.covered = within_band(cell.quantile, report.band);
    report.cells.push_back(std::move(cell));
  }
}

inline const BlockFit& block_for(const FitResult& fit, std::size_t t) {
  for (const auto& b : fit.blocks) {
    if (t >= b.first_t && t <= b.last_t) return b;
  }
  if (!fit.heterogeneous && fit.blocks.size() == 1) return fit.blocks.front();
  throw DataError("fit has no parameter block for t=" + std::to_string(t));
}

inline void check_fit_matches(const FitResult& fit, const ModelSpec& spec) {
  if (fit.blocks.empty()) throw DataError("fit result holds no parameter blocks");
  for (const auto& b : fit.blocks) {
    if (b.eta.plus.size() != spec.p_plus() || b.eta.minus.size() != spec.p_minus()) {
      throw SpecError("fit parameters do not match the model's statistic counts");
    }
  }
}

}  // namespace detail

// For each t = 2..T, `count` networks simulated from an all-ones start
// conditional on observed y^{t-1}, compared with the observed statistics.
inline GofReport gof_simulate(const FitResult& fit, const NetworkSeries& series,
                              const ModelSpec& spec, std::size_t count, std::size_t k, Rng& rng,
                              double band = 0.95, std::size_t threads = 1) {
  detail::check_fit_matches(fit, spec);
  if (series.length() < 2) throw DataError("goodness of fit needs T >= 2");
  if (count < 1) throw SpecError("goodness of fit needs count >= 1");
  const BoundModel model(spec, series.covariates, series.node_count(), series.orientation());
  GofReport report;
  report.band = band;
  const std::uint64_t seed = rng();
  for (std::size_t t = 2; t <= series.length(); ++t) {
    const auto& prev = series.at(t - 1);
    const auto& eta = detail::block_for(fit, t).eta;
    const Count cap = spec.cap_for(series, t);
    const auto init = ValuedNetwork::filled(prev.size(), prev.orientation(), 1);
    std::vector<ValuedNetwork> draws(count);
    parallel_for(count, threads, [&](std::size_t r) {
      Rng local = derive_rng(seed, {t, r});
      draws[r] = simulate(k, eta, prev, init, model, cap, local);
    });
    std::vector<Eigen::VectorXd> stats;
    for (const auto& d : draws) stats.push_back(model.statistics(prev, d));
    detail::add_cells(report, t, model, stats, model.statistics(prev, series.at(t)));
  }
  return report;
}

struct ForecastStep {
  std::size_t t = 0;
  std::vector<ValuedNetwork> samples;
  std::vector<Eigen::VectorXd> statistics;  // [g+, g-] of each sample against its predecessor
};

struct ForecastResult {
  std::vector<ForecastStep> steps;
  std::optional<GofReport> report;  // present when any forecast time has a held-out observation
};

// Forecasts y^t for each requested t from a homogeneous fit. With chained=false
// every step conditions on the observed y^{t-1}; with chained=true step h
// conditions on the matching draw from step h-1, extrapolating past the data.
inline ForecastResult forecast(const FitResult& fit, const NetworkSeries& series,
                               const ModelSpec& spec, const std::vector<std::size_t>& times,
                               std::size_t count, std::size_t k, Rng& rng, bool chained = false,
                               double band = 0.95, std::size_t threads = 1) {
  if (fit.heterogeneous) {
    throw SpecError("time-heterogeneous fits cannot forecast; refit with a homogeneous model");
  }
  detail::check_fit_matches(fit, spec);
  if (!spec.m) throw SpecError("forecasting needs a fixed diminution cap m");
  ForecastResult out;
  if (times.empty()) return out;
  if (count < 1) throw SpecError("forecasting needs count >= 1");
  const BoundModel model(spec, series.covariates, series.node_count(), series.orientation());
  const auto& eta = fit.blocks.front().eta;
  const Count cap = *spec.m;
  const std::uint64_t seed = rng();
  GofReport report;
  report.band = band;
  for (std::size_t h = 0; h < times.size(); ++h) {
    const std::size_t t = times[h];
    if (t < 2) throw DataError("forecast times start at t=2");
    const bool use_draws = chained && h > 0;
    if (use_draws && t != times[h - 1] + 1) {
      throw DataError("chained forecasts need consecutive times");
    }
    if (!use_draws && t - 1 > series.length()) {
      throw DataError("forecast for t=" + std::to_string(t) + " is missing observed y^" +
                      std::to_string(t - 1));
    }
    ForecastStep step;
    step.t = t;
    step.samples.resize(count);
    const auto& prior = out.steps;
    parallel_for(count, threads, [&](std::size_t r) {
      const ValuedNetwork& prev = use_draws ? prior.back().samples[r] : series.at(t - 1);
      const auto init = ValuedNetwork::filled(prev.size(), prev.orientation(), 1);
      Rng local = derive_rng(seed, {t, r});
      step.samples[r] = simulate(k, eta, prev, init, model, cap, local);
    });
    for (std::size_t r = 0; r < count; ++r) {
      const ValuedNetwork& prev = use_draws ? prior.back().samples[r] : series.at(t - 1);
      step.statistics.push_back(model.statistics(prev, step.samples[r]));
    }
    if (t <= series.length()) {
      detail::add_cells(report, t, model, step.statistics, model.statistics(series.at(t - 1), series.at(t)));
    }
    out.steps.push_back(std::move(step));
  }
  if (!report.cells.empty()) out.report = std::move(report);
  return out;
}

}  // namespace pstergm
