// Command-line front end: stats, fit, simulate, forecast, gof, ingest.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pstergm/pstergm.hpp"

namespace fs = std::filesystem;
using namespace pstergm;

namespace {

enum Exit : int { ok = 0, failure = 1, usage = 2, data = 3, estimation = 4 };

struct Common {
  std::string config;
  std::string series;
  std::vector<std::string> aug;
  std::vector<std::string> dim;
  std::optional<Count> m;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool model_flags) {
  cmd->add_option("-c,--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("-s,--series", c.series, "series metadata file (overrides the config)");
  if (model_flags) {
    cmd->add_option("--aug", c.aug, "augmentation statistic, repeatable (e.g. edge_sum, homophily:gender=M)")
        ->delimiter('\0');
    cmd->add_option("--dim", c.dim, "diminution statistic, repeatable; defaults to the --aug list")
        ->delimiter('\0');
    cmd->add_option("--m", c.m, "fixed diminution cap; default is the per-interval observed maximum");
  }
  cmd->add_option("-o,--out", c.out, "output path");
}

void add_random(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  if (!c.series.empty()) cfg.series = fs::absolute(c.series).string();
  if (!c.aug.empty()) {
    cfg.model.aug_stats.clear();
    for (const auto& s : c.aug) cfg.model.aug_stats.push_back(parse_statistic(s));
    if (c.dim.empty()) cfg.model.dim_stats = cfg.model.aug_stats;
  }
  if (!c.dim.empty()) {
    cfg.model.dim_stats.clear();
    for (const auto& s : c.dim) cfg.model.dim_stats.push_back(parse_statistic(s));
  }
  if (c.m) cfg.model.m = *c.m;
  if (c.seed) cfg.seed = *c.seed;
  if (c.threads) cfg.threads = *c.threads;
  if (!c.out.empty()) cfg.output = c.out;
  return cfg;
}

SeriesDocument load_data(const RunConfig& cfg) {
  if (cfg.series.empty()) throw SpecError("no series given; use --series or the config's \"series\" key");
  return load_series_document(cfg.resolve(cfg.series));
}

// Model from the config, falling back to the cap stored with the series.
ModelSpec model_for(const RunConfig& cfg, const SeriesDocument& doc) {
  ModelSpec spec = cfg.model;
  if (spec.aug_stats.empty()) throw SpecError("no model statistics; set model.aug in the config or pass --aug");
  if (!spec.m && doc.m) spec.m = doc.m;
  check_model_against(spec, doc.series);
  return spec;
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
  } else {
    io_detail::write_file(path, text);
  }
}

NetworkSeries prefix(const NetworkSeries& s, std::optional<std::size_t> until) {
  if (!until) return s;
  if (*until < 2 || *until > s.length()) {
    throw SpecError("fit_until must lie in 2.." + std::to_string(s.length()));
  }
  NetworkSeries out = s;
  out.networks.resize(*until);
  return out;
}

FitResult load_fit(const std::string& path) {
  try {
    return fit_from_json(nlohmann::json::parse(io_detail::read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
}

int cmd_stats(const Common& c) {
  const auto cfg = resolve(c);
  const auto doc = load_data(cfg);
  const auto spec = model_for(cfg, doc);
  const auto& series = doc.series;
  if (series.length() < 2) throw DataError("statistics need a series with T >= 2");
  const BoundModel model(spec, series.covariates, series.node_count(), series.orientation());
  std::string out = "t\tm";
  for (const auto& l : model.aug.labels()) out += "\taug:" + l;
  for (const auto& l : model.dim.labels()) out += "\tdim:" + l;
  out += "\n";
  for (std::size_t t = 2; t <= series.length(); ++t) {
    const auto g = model.statistics(series.at(t - 1), series.at(t));
    out += std::to_string(t) + "\t" + std::to_string(spec.cap_for(series, t));
    for (Eigen::Index k = 0; k < g.size(); ++k) out += "\t" + io_detail::format_double(g[k]);
    out += "\n";
  }
  write_or_print(cfg.output, out);
  return ok;
}

int cmd_fit(const Common& c, const std::string& mode, bool trajectory, const std::string& table) {
  auto cfg = resolve(c);
  if (!mode.empty()) cfg.model.heterogeneous = mode == "heterogeneous";
  const auto doc = load_data(cfg);
  const auto spec = model_for(cfg, doc);
  const auto series = prefix(doc.series, cfg.fit_until);
  const auto schedule = cfg.schedule.resolve(series.node_count());
  const auto result = fit(series, spec, schedule, cfg.seed, cfg.threads);
  const auto json = fit_to_json(result, trajectory).dump(2) + "\n";
  if (!cfg.output.empty()) io_detail::write_file(cfg.output, json);
  const auto tab = parameter_table(result);
  if (!table.empty()) io_detail::write_file(table, tab);
  std::cout << tab;
  for (const auto& b : result.blocks) {
    if (schedule.standard_errors && !b.fisher_positive_definite) {
      std::cerr << "warning: Fisher information for t=" << b.first_t << ".." << b.last_t
                << " is not positive definite; standard errors reported as NA\n";
    }
  }
  return ok;
}

struct SimulateFlags {
  std::string eta_plus;
  std::string eta_minus;
  std::optional<std::size_t> nodes;
  std::optional<std::size_t> length;
  std::string orientation;
  std::string cd_steps;
  bool ones_first = false;
};

int cmd_simulate(const Common& c, const SimulateFlags& f) {
  auto cfg = resolve(c);
  auto& sim = cfg.simulate;
  auto numbers = [](const std::string& text) { return config_detail::number_list(nlohmann::json(text)); };
  if (!f.eta_plus.empty()) sim.eta.plus = numbers(f.eta_plus);
  if (!f.eta_minus.empty()) sim.eta.minus = numbers(f.eta_minus);
  if (f.nodes) sim.nodes = *f.nodes;
  if (f.length) sim.length = *f.length;
  if (!f.orientation.empty()) sim.orientation = parse_orientation(f.orientation);
  if (!f.cd_steps.empty()) sim.cd_steps = StepCount::parse(f.cd_steps);
  if (f.ones_first) sim.first = "ones";
  if (cfg.model.aug_stats.empty()) {
    // Three-statistic generator used for parameter-recovery studies.
    cfg.model.aug_stats = {StatisticSpec::of(StatKind::edge_sum), StatisticSpec::of(StatKind::mutuality),
                           StatisticSpec::of(StatKind::transitive_weight)};
    cfg.model.dim_stats = cfg.model.aug_stats;
  }
  auto& spec = cfg.model;
  spec.validate();
  if (!spec.m) throw SpecError("simulate needs a fixed cap; pass --m");
  if (sim.eta.plus.size() != spec.p_plus() || sim.eta.minus.size() != spec.p_minus()) {
    throw SpecError("eta has " + std::to_string(sim.eta.plus.size()) + "+" + std::to_string(sim.eta.minus.size()) +
                    " entries but the model has " + std::to_string(spec.p_plus()) + "+" +
                    std::to_string(spec.p_minus()) + " statistics");
  }
  if (cfg.output.empty()) throw SpecError("simulate needs --out for the series metadata file");
  const BoundModel model(spec, Covariates{}, sim.nodes, sim.orientation);
  Rng rng(cfg.seed);
  const auto series = simulate_series(sim.eta, model, sim.nodes, sim.orientation, sim.length, *spec.m,
                                      sim.cd_steps.resolve(sim.nodes), rng, sim.first == "simulate");
  save_series_document({series, spec.m}, cfg.output);
  return ok;
}

int cmd_gof(const Common& c, const std::string& fit_path, std::optional<std::size_t> count,
            const std::string& cd_steps) {
  auto cfg = resolve(c);
  if (count) cfg.gof.count = *count;
  if (!cd_steps.empty()) cfg.gof.cd_steps = StepCount::parse(cd_steps);
  const auto doc = load_data(cfg);
  const auto spec = model_for(cfg, doc);
  const auto fitted = load_fit(fit_path);
  auto series = prefix(doc.series, cfg.fit_until);
  Rng rng(cfg.seed);
  const auto report = gof_simulate(fitted, series, spec, cfg.gof.count, cfg.gof.cd_steps.resolve(series.node_count()),
                                   rng, cfg.gof.band, cfg.threads);
  write_or_print(cfg.output, gof_table(report));
  return ok;
}

int cmd_forecast(const Common& c, const std::string& fit_path, std::vector<std::size_t> times,
                 std::optional<std::size_t> count, const std::string& cd_steps, bool chained) {
  auto cfg = resolve(c);
  if (!times.empty()) cfg.forecast.times = times;
  if (count) cfg.forecast.count = *count;
  if (!cd_steps.empty()) cfg.forecast.cd_steps = StepCount::parse(cd_steps);
  if (chained) cfg.forecast.chained = true;
  if (cfg.forecast.times.empty()) throw SpecError("forecast needs --times or forecast.times in the config");
  const auto doc = load_data(cfg);
  const auto spec = model_for(cfg, doc);
  const auto fitted = load_fit(fit_path);
  Rng rng(cfg.seed);
  const auto& f = cfg.forecast;
  const auto result = forecast(fitted, doc.series, spec, f.times, f.count, f.cd_steps.resolve(doc.series.node_count()),
                               rng, f.chained, f.band, cfg.threads);
  write_or_print(cfg.output, forecast_table(result, fitted.aug_labels, fitted.dim_labels, f.band));
  return ok;
}

struct IngestFlags {
  std::string events;
  std::string roster;
  std::vector<std::string> columns;
  std::vector<std::string> require;
  std::vector<std::string> missing{"Unknown", "NA"};
  std::vector<std::string> keep;
  std::vector<std::string> dyadic;
  std::int64_t bucket = 86400;
  std::int64_t merge_gap = 20;
  std::optional<std::int64_t> origin;
  std::optional<std::size_t> buckets;
  std::optional<Count> m;
};

int cmd_ingest(const IngestFlags& f, const std::string& out) {
  if (out.empty()) throw SpecError("ingest needs --out for the series metadata file");
  const auto events = load_contact_events(f.events);
  Roster roster;
  std::set<std::string> excluded;
  if (!f.roster.empty()) {
    roster = load_roster(f.roster, f.columns);
    const std::set<std::string> tokens(f.missing.begin(), f.missing.end());
    // Nodes lacking a required attribute leave the roster before aggregation.
    for (auto& id : drop_incomplete(roster, f.require, tokens)) excluded.insert(std::move(id));
    for (const auto& rule : f.keep) {
      const auto eq = rule.find('=');
      if (eq == std::string::npos) throw SpecError("--keep expects attr=value, got '" + rule + "'");
      const auto attr = rule.substr(0, eq);
      const auto value = rule.substr(eq + 1);
      if (!roster.attributes.contains(attr)) throw SpecError("roster has no attribute '" + attr + "'");
      Roster kept;
      for (const auto& [name, _] : roster.attributes) kept.attributes[name];
      for (std::size_t k = 0; k < roster.nodes.size(); ++k) {
        if (roster.attributes[attr][k] != value) {
          excluded.insert(roster.nodes[k]);
          continue;
        }
        kept.nodes.push_back(roster.nodes[k]);
        for (auto& [name, values] : roster.attributes) kept.attributes[name].push_back(values[k]);
      }
      roster = std::move(kept);
    }
    if (roster.nodes.empty()) throw DataError("roster is empty after filtering");
  } else if (!f.require.empty() || !f.keep.empty()) {
    throw SpecError("--require and --keep need --roster");
  }
  AggregateOptions opt;
  opt.bucket = f.bucket;
  opt.merge_gap = f.merge_gap;
  opt.origin = f.origin;
  opt.buckets = f.buckets;
  auto series = aggregate_contacts(events, opt, roster.nodes, excluded);
  for (const auto& [name, values] : roster.attributes) series.covariates.nodal[name] = values;
  for (const auto& spec : f.dyadic) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw SpecError("--dyadic expects name=path, got '" + spec + "'");
    const auto path = spec.substr(eq + 1);
    series.covariates.dyadic[spec.substr(0, eq)] =
        parse_pair_covariate(io_detail::read_file(path), series.nodes, false, path);
  }
  save_series_document({series, f.m}, out);
  Count total = 0;
  for (const auto& net : series.networks) net.for_each_dyad([&](std::size_t, std::size_t, Count v) { total += v; });
  std::cerr << "ingested " << events.size() << " events into " << series.length() << " networks over "
            << series.node_count() << " nodes (" << total << " merged contacts)\n";
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partially separable temporal ERGMs for valued networks"};
  app.require_subcommand(1);

  Common stats_c, fit_c, sim_c, gof_c, fc_c;

  auto* stats = app.add_subcommand("stats", "augmentation and diminution statistics for each transition");
  add_common(stats, stats_c, true);

  auto* fitc = app.add_subcommand("fit", "estimate parameters by partial stepping and Newton-Raphson");
  add_common(fitc, fit_c, true);
  add_random(fitc, fit_c);
  std::string mode;
  bool trajectory = false;
  std::string table;
  fitc->add_option("--mode", mode, "homogeneous (one block) or heterogeneous (one block per transition)")
      ->check(CLI::IsMember({"homogeneous", "heterogeneous"}));
  fitc->add_flag("--trajectory", trajectory, "include per-iteration estimates in the JSON output");
  fitc->add_option("--table", table, "also write the parameter table to this file");

  auto* sim = app.add_subcommand("simulate", "generate a synthetic series from given parameters");
  add_common(sim, sim_c, true);
  add_random(sim, sim_c);
  SimulateFlags sf;
  sim->add_option("--eta-plus", sf.eta_plus, "augmentation coefficients, comma separated");
  sim->add_option("--eta-minus", sf.eta_minus, "diminution coefficients, comma separated");
  sim->add_option("-n,--nodes", sf.nodes, "number of nodes (default 50)");
  sim->add_option("-T,--length", sf.length, "number of networks (default 2)");
  sim->add_option("--orientation", sf.orientation, "directed (default) or undirected");
  sim->add_option("-K,--cd-steps", sf.cd_steps, "transitions per network, e.g. 20n^2 (default)");
  sim->add_flag("--ones-first", sf.ones_first, "use the all-ones network as y^1 instead of simulating it");

  auto* gof = app.add_subcommand("gof", "simulate from a fit and compare with the observed statistics");
  add_common(gof, gof_c, true);
  add_random(gof, gof_c);
  std::string gof_fit;
  std::optional<std::size_t> gof_count;
  std::string gof_k;
  gof->add_option("--fit", gof_fit, "fit result JSON from `fit --out`")->required()->check(CLI::ExistingFile);
  gof->add_option("--count", gof_count, "networks per transition (default 100)");
  gof->add_option("-K,--cd-steps", gof_k, "transitions per network (default 200n^2)");

  auto* fc = app.add_subcommand("forecast", "forecast networks from a homogeneous fit");
  add_common(fc, fc_c, true);
  add_random(fc, fc_c);
  std::string fc_fit;
  std::vector<std::size_t> fc_times;
  std::optional<std::size_t> fc_count;
  std::string fc_k;
  bool chained = false;
  fc->add_option("--fit", fc_fit, "fit result JSON from `fit --out`")->required()->check(CLI::ExistingFile);
  fc->add_option("--times", fc_times, "time points to forecast, e.g. 24,25,26")->delimiter(',');
  fc->add_option("--count", fc_count, "networks per time point (default 100)");
  fc->add_option("-K,--cd-steps", fc_k, "transitions per network (default 200n^2)");
  fc->add_flag("--chained", chained, "condition each step on the previous step's draws");

  auto* ing = app.add_subcommand("ingest", "aggregate a contact-event log into a valued network series");
  IngestFlags inf;
  std::string ing_out;
  ing->add_option("--events", inf.events, "whitespace 'timestamp i j' lines, extra columns ignored")
      ->required()
      ->check(CLI::ExistingFile);
  ing->add_option("--roster", inf.roster, "whitespace 'id attr1 attr2 ...' lines")->check(CLI::ExistingFile);
  ing->add_option("--columns", inf.columns, "attribute names for the roster columns")->delimiter(',');
  ing->add_option("--require", inf.require, "drop roster nodes missing these attributes before aggregation")
      ->delimiter(',');
  ing->add_option("--missing", inf.missing, "tokens that mark a missing attribute (default Unknown,NA)")
      ->delimiter(',');
  ing->add_option("--keep", inf.keep, "keep only nodes with attr=value; contacts with others are dropped");
  ing->add_option("--dyadic", inf.dyadic, "name=path of whitespace 'i j [value]' pairs, repeatable");
  ing->add_option("--bucket", inf.bucket, "seconds per network (default 86400, one day)")
      ->check(CLI::PositiveNumber);
  ing->add_option("--merge-gap", inf.merge_gap,
                  "seconds: a pair's events at most this far apart within a bucket count as one contact. "
                  "With 20-second logging, the default 20 merges consecutive records into a single contact "
                  "regardless of its duration")
      ->check(CLI::NonNegativeNumber);
  ing->add_option("--origin", inf.origin, "timestamp where the first bucket starts (default: first event, floored)");
  ing->add_option("--buckets", inf.buckets, "number of networks (default: through the last event)");
  ing->add_option("--m", inf.m, "diminution cap to store in the metadata");
  ing->add_option("-o,--out", ing_out, "series metadata file to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage;
  }

  try {
    if (*stats) return cmd_stats(stats_c);
    if (*fitc) return cmd_fit(fit_c, mode, trajectory, table);
    if (*sim) return cmd_simulate(sim_c, sf);
    if (*gof) return cmd_gof(gof_c, gof_fit, gof_count, gof_k);
    if (*fc) return cmd_forecast(fc_c, fc_fit, fc_times, fc_count, fc_k, chained);
    if (*ing) return cmd_ingest(inf, ing_out);
  } catch (const SpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return data;
  } catch (const EstimationError& e) {
    std::cerr << "estimation failed: " << e.what() << " after " << e.trajectory.size() << " iterations\n";
    return estimation;
  } catch (const SingularMatrix& e) {
    std::cerr << "estimation failed: " << e.what() << "\n";
    return estimation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return failure;
  }
  return usage;
}
