#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "pstergm/error.hpp"
#include "pstergm/network.hpp"

// Series files: a JSON metadata document plus a sparse edge table.
//
//   {"orientation": "undirected", "nodes": ["a", "b", "c"], "T": 5,
//    "edges": "contacts.edges.csv", "m": 200,
//    "attributes": {"gender": ["F", "M", ""]},
//    "dyadic": {"facebook": "contacts.facebook.csv"}}
//
// The edge table has the header "t,i,j,w" and one row per nonzero dyad, with
// 1-based t and roster names for i and j. Cells may also be written as
// "t=2,i=alice,j=bob,w=5". Omitted dyads are zero. Dyadic covariate tables use
// the header "i,j,value". Paths inside the metadata are relative to it.

namespace pstergm {

namespace io_detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t k = 0;
  while (k < line.size()) {
    while (k < line.size() && std::isspace(static_cast<unsigned char>(line[k]))) ++k;
    const auto start = k;
    while (k < line.size() && !std::isspace(static_cast<unsigned char>(line[k]))) ++k;
    if (k > start) out.push_back(line.substr(start, k - start));
  }
  return out;
}

inline std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  if constexpr (std::is_floating_point_v<T>) {
    // from_chars rejects a leading '+'; so do we, for symmetry with to_chars output.
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size() && std::isfinite(out);
  } else {
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
  }
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error("cannot format number");
  return std::string(buf, p);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

template <class Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    fn(line_no, std::string_view(text).substr(start, end - start));
    start = end + 1;
  }
}

inline void check_name(const std::string& name, const char* what) {
  if (name.empty()) throw DataError(std::string(what) + " names must be nonempty");
  for (char c : name) {
    if (c == ',' || c == '=' || c == '\n' || c == '\r' || std::isspace(static_cast<unsigned char>(c))) {
      throw DataError(std::string(what) + " name '" + name + "' contains a reserved character");
    }
  }
}

using Index = std::unordered_map<std::string, std::size_t>;

inline Index roster_index(const std::vector<std::string>& nodes) {
  Index index;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    check_name(nodes[k], "node");
    if (!index.emplace(nodes[k], k).second) throw DataError("duplicate node '" + nodes[k] + "' in roster");
  }
  return index;
}

// Maps a header of "a,b,c" onto row cells, accepting positional or key=value cells.
struct RowReader {
  std::vector<std::string> keys;

  std::vector<std::string_view> read(std::string_view line, const std::filesystem::path& path,
                                     std::size_t line_no) const {
    auto cells = split(line, ',');
    if (cells.size() != keys.size()) {
      throw DataError(where(path, line_no) + "expected " + std::to_string(keys.size()) + " fields, got " +
                      std::to_string(cells.size()));
    }
    std::vector<std::string_view> out(keys.size());
    std::vector<bool> seen(keys.size(), false);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto eq = cells[c].find('=');
      std::size_t slot = c;
      std::string_view value = cells[c];
      if (eq != std::string_view::npos) {
        const auto key = trim(cells[c].substr(0, eq));
        const auto it = std::find(keys.begin(), keys.end(), key);
        if (it == keys.end()) throw DataError(where(path, line_no) + "unknown field '" + std::string(key) + "'");
        slot = static_cast<std::size_t>(it - keys.begin());
        value = trim(cells[c].substr(eq + 1));
      }
      if (seen[slot]) throw DataError(where(path, line_no) + "field '" + keys[slot] + "' given twice");
      seen[slot] = true;
      out[slot] = value;
    }
    return out;
  }
};

inline std::size_t lookup(const Index& index, std::string_view name, const std::filesystem::path& path,
                          std::size_t line_no) {
  const auto it = index.find(std::string(name));
  if (it == index.end()) throw DataError(where(path, line_no) + "unknown node '" + std::string(name) + "'");
  return it->second;
}

}  // namespace io_detail

// A series together with the optional diminution cap stored in its metadata.
struct SeriesDocument {
  NetworkSeries series;
  std::optional<Count> m;
};

inline void throw_if_invalid(const NetworkSeries& series) {
  const auto problems = validate_series(series);
  if (problems.empty()) return;
  std::string msg = "invalid series: " + problems.front().message;
  if (problems.size() > 1) msg += " (and " + std::to_string(problems.size() - 1) + " more)";
  throw DataError(msg);
}

// Reads an "i,j,value" table into a dense n*n matrix. Undirected series mirror each row.
inline std::vector<double> load_dyadic_table(const std::filesystem::path& path, const io_detail::Index& index,
                                             std::size_t n, bool directed) {
  const auto text = io_detail::read_file(path);
  const io_detail::RowReader reader{{"i", "j", "value"}};
  std::vector<double> out(n * n, 0.0);
  std::vector<bool> seen(n * n, false);
  bool header = false;
  io_detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (io_detail::trim(line).empty()) return;
    if (!header) {
      if (io_detail::trim(line) != "i,j,value") {
        throw DataError(io_detail::where(path, line_no) + "expected header 'i,j,value'");
      }
      header = true;
      return;
    }
    const auto cells = reader.read(line, path, line_no);
    const auto i = io_detail::lookup(index, cells[0], path, line_no);
    const auto j = io_detail::lookup(index, cells[1], path, line_no);
    if (i == j) throw DataError(io_detail::where(path, line_no) + "covariate on the diagonal");
    double v = 0;
    if (!io_detail::parse_number(cells[2], v)) {
      throw DataError(io_detail::where(path, line_no) + "bad value '" + std::string(cells[2]) + "'");
    }
    const auto a = directed ? i : std::min(i, j);
    const auto b = directed ? j : std::max(i, j);
    if (seen[a * n + b]) throw DataError(io_detail::where(path, line_no) + "duplicate pair");
    seen[a * n + b] = true;
    out[a * n + b] = v;
    if (!directed) out[b * n + a] = v;
  });
  if (!header) throw DataError(path.string() + ": missing header 'i,j,value'");
  return out;
}

inline SeriesDocument load_series_document(const std::filesystem::path& meta_path) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(io_detail::read_file(meta_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(meta_path.string() + ": " + e.what());
  }
  const auto dir = meta_path.parent_path();
  SeriesDocument doc;
  auto& series = doc.series;
  try {
    const auto orient_name = meta.at("orientation").get<std::string>();
    Orientation orient;
    if (orient_name == "directed") orient = Orientation::directed;
    else if (orient_name == "undirected") orient = Orientation::undirected;
    else throw DataError(meta_path.string() + ": orientation must be 'directed' or 'undirected'");
    series.nodes = meta.at("nodes").get<std::vector<std::string>>();
    const auto T = meta.at("T").get<std::size_t>();
    if (T == 0) throw DataError(meta_path.string() + ": series is empty (T=0)");
    if (meta.contains("m") && !meta["m"].is_null()) doc.m = meta["m"].get<Count>();
    const auto index = io_detail::roster_index(series.nodes);
    const auto n = series.nodes.size();
    series.networks.assign(T, ValuedNetwork(n, orient));

    if (meta.contains("attributes")) {
      for (const auto& [name, values] : meta["attributes"].items()) {
        io_detail::check_name(name, "attribute");
        series.covariates.nodal[name] = values.get<std::vector<std::string>>();
      }
    }
    if (meta.contains("dyadic")) {
      for (const auto& [name, file] : meta["dyadic"].items()) {
        io_detail::check_name(name, "covariate");
        series.covariates.dyadic[name] =
            load_dyadic_table(dir / file.get<std::string>(), index, n, orient == Orientation::directed);
      }
    }

    const auto edges_path = dir / meta.at("edges").get<std::string>();
    const auto text = io_detail::read_file(edges_path);
    const io_detail::RowReader reader{{"t", "i", "j", "w"}};
    std::vector<std::vector<bool>> seen(T, std::vector<bool>(n * n, false));
    bool header = false;
    io_detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
      if (io_detail::trim(line).empty()) return;
      if (!header) {
        if (io_detail::trim(line) != "t,i,j,w") {
          throw DataError(io_detail::where(edges_path, line_no) + "expected header 't,i,j,w'");
        }
        header = true;
        return;
      }
      const auto cells = reader.read(line, edges_path, line_no);
      std::size_t t = 0;
      if (!io_detail::parse_number(cells[0], t) || t < 1 || t > T) {
        throw DataError(io_detail::where(edges_path, line_no) + "time index '" + std::string(cells[0]) +
                        "' outside 1.." + std::to_string(T));
      }
      const auto i = io_detail::lookup(index, cells[1], edges_path, line_no);
      const auto j = io_detail::lookup(index, cells[2], edges_path, line_no);
      if (i == j) throw DataError(io_detail::where(edges_path, line_no) + "self-loop on '" + std::string(cells[1]) + "'");
      Count w = 0;
      if (!io_detail::parse_number(cells[3], w) || w < 0) {
        throw DataError(io_detail::where(edges_path, line_no) + "weight must be a nonnegative integer, got '" +
                        std::string(cells[3]) + "'");
      }
      const auto a = orient == Orientation::directed ? i : std::min(i, j);
      const auto b = orient == Orientation::directed ? j : std::max(i, j);
      auto mark = seen[t - 1][a * n + b];
      if (mark) throw DataError(io_detail::where(edges_path, line_no) + "duplicate dyad");
      mark = true;
      series.networks[t - 1].set(a, b, w);
    });
    if (!header) throw DataError(edges_path.string() + ": missing header 't,i,j,w'");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(meta_path.string() + ": " + e.what());
  }
  throw_if_invalid(series);
  return doc;
}

inline NetworkSeries load_series(const std::filesystem::path& meta_path) {
  return load_series_document(meta_path).series;
}

// Writes `<stem>.json`, `<stem>.edges.csv` and one `<stem>.<covariate>.csv` per
// dyadic covariate next to meta_path. Output is canonical: rows ordered by
// (t, i, j) in roster order, undirected dyads once with i before j, zeros omitted.
inline void save_series_document(const SeriesDocument& doc, const std::filesystem::path& meta_path) {
  const auto& series = doc.series;
  if (series.length() == 0) throw DataError("cannot save an empty series");
  throw_if_invalid(series);
  io_detail::roster_index(series.nodes);
  const auto dir = meta_path.parent_path();
  const auto stem = meta_path.stem().string();
  const auto n = series.node_count();
  const bool directed = series.orientation() == Orientation::directed;

  nlohmann::ordered_json meta;
  meta["orientation"] = orientation_name(series.orientation());
  meta["nodes"] = series.nodes;
  meta["T"] = series.length();
  meta["edges"] = stem + ".edges.csv";
  if (doc.m) meta["m"] = *doc.m;
  if (!series.covariates.nodal.empty()) {
    auto& attrs = meta["attributes"];
    for (const auto& [name, values] : series.covariates.nodal) {
      io_detail::check_name(name, "attribute");
      attrs[name] = values;
    }
  }
  if (!series.covariates.dyadic.empty()) {
    auto& dyadic = meta["dyadic"];
    for (const auto& [name, values] : series.covariates.dyadic) {
      io_detail::check_name(name, "covariate");
      const auto file = stem + "." + name + ".csv";
      dyadic[name] = file;
      std::string text = "i,j,value\n";
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = directed ? 0 : i + 1; j < n; ++j) {
          if (i == j || values[i * n + j] == 0.0) continue;
          text += series.nodes[i] + "," + series.nodes[j] + "," + io_detail::format_double(values[i * n + j]) + "\n";
        }
      }
      io_detail::write_file(dir / file, text);
    }
  }

  std::string text = "t,i,j,w\n";
  for (std::size_t t = 1; t <= series.length(); ++t) {
    const auto ts = std::to_string(t);
    series.at(t).for_each_dyad([&](std::size_t i, std::size_t j, Count v) {
      if (v != 0) text += ts + "," + series.nodes[i] + "," + series.nodes[j] + "," + std::to_string(v) + "\n";
    });
  }
  io_detail::write_file(dir / (stem + ".edges.csv"), text);
  io_detail::write_file(meta_path, meta.dump(2) + "\n");
}

inline void save_series(const NetworkSeries& series, const std::filesystem::path& meta_path) {
  save_series_document({series, std::nullopt}, meta_path);
}

// ---------------------------------------------------------------------------
// Contact logs

struct ContactEvent {
  std::int64_t timestamp = 0;  // seconds
  std::string i;
  std::string j;
};

// Whitespace-separated "timestamp i j [extra columns...]" lines; '#' starts a comment.
inline std::vector<ContactEvent> parse_contact_events(const std::string& text,
                                                      const std::filesystem::path& source = "<input>") {
  std::vector<ContactEvent> out;
  io_detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    const auto cells = io_detail::split_ws(line);
    if (cells.empty()) return;
    if (cells.size() < 3) throw DataError(io_detail::where(source, line_no) + "expected 'timestamp i j'");
    ContactEvent e;
    if (!io_detail::parse_number(cells[0], e.timestamp) || e.timestamp < 0) {
      throw DataError(io_detail::where(source, line_no) + "bad timestamp '" + std::string(cells[0]) + "'");
    }
    e.i = std::string(cells[1]);
    e.j = std::string(cells[2]);
    if (e.i == e.j) throw DataError(io_detail::where(source, line_no) + "contact of '" + e.i + "' with itself");
    out.push_back(std::move(e));
  });
  return out;
}

inline std::vector<ContactEvent> load_contact_events(const std::filesystem::path& path) {
  return parse_contact_events(io_detail::read_file(path), path);
}

// Node roster with nodal attributes, read from whitespace-separated
// "id value1 value2 ..." lines whose columns are named by `columns`.
struct Roster {
  std::vector<std::string> nodes;
  std::map<std::string, std::vector<std::string>> attributes;
};

inline Roster parse_roster(const std::string& text, const std::vector<std::string>& columns,
                           const std::filesystem::path& source = "<roster>") {
  Roster r;
  for (const auto& c : columns) r.attributes[c];
  io_detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    const auto cells = io_detail::split_ws(line);
    if (cells.empty()) return;
    if (cells.size() != columns.size() + 1) {
      throw DataError(io_detail::where(source, line_no) + "expected id plus " + std::to_string(columns.size()) +
                      " attribute columns");
    }
    r.nodes.emplace_back(cells[0]);
    for (std::size_t c = 0; c < columns.size(); ++c) r.attributes[columns[c]].emplace_back(cells[c + 1]);
  });
  io_detail::roster_index(r.nodes);
  return r;
}

inline Roster load_roster(const std::filesystem::path& path, const std::vector<std::string>& columns) {
  return parse_roster(io_detail::read_file(path), columns, path);
}

// Drops nodes whose value for any of `required` is one of `missing_tokens`.
// Returns the ids removed.
inline std::vector<std::string> drop_incomplete(Roster& roster, const std::vector<std::string>& required,
                                                const std::set<std::string>& missing_tokens) {
  for (const auto& a : required) {
    if (!roster.attributes.contains(a)) throw SpecError("roster has no attribute '" + a + "'");
  }
  std::vector<std::string> removed;
  Roster kept;
  for (const auto& [name, _] : roster.attributes) kept.attributes[name];
  for (std::size_t k = 0; k < roster.nodes.size(); ++k) {
    bool missing = false;
    for (const auto& a : required) missing = missing || missing_tokens.contains(roster.attributes[a][k]);
    if (missing) {
      removed.push_back(roster.nodes[k]);
      continue;
    }
    kept.nodes.push_back(roster.nodes[k]);
    for (auto& [name, values] : roster.attributes) kept.attributes[name].push_back(values[k]);
  }
  roster = std::move(kept);
  return removed;
}

struct AggregateOptions {
  std::int64_t bucket = 86400;          // seconds per network
  std::int64_t merge_gap = 20;          // events this close (seconds) extend one contact
  std::optional<std::int64_t> origin;   // start of bucket 1; default floors the first event to a bucket boundary
  std::optional<std::size_t> buckets;   // series length; default runs through the last event
};

// Daily (or other bucket) undirected contact counts. Within a bucket, a pair's
// events form one contact while consecutive gaps are <= merge_gap; a longer
// gap starts a new one. Events touching `excluded` ids are dropped. With an
// empty roster the sorted set of ids seen becomes the roster.
inline NetworkSeries aggregate_contacts(const std::vector<ContactEvent>& events, const AggregateOptions& opt,
                                        std::vector<std::string> roster = {},
                                        const std::set<std::string>& excluded = {}) {
  if (opt.bucket <= 0) throw SpecError("bucket length must be positive");
  if (opt.merge_gap < 0) throw SpecError("merge gap must be nonnegative");
  if (roster.empty()) {
    std::set<std::string> ids;
    for (const auto& e : events) {
      if (!excluded.contains(e.i)) ids.insert(e.i);
      if (!excluded.contains(e.j)) ids.insert(e.j);
    }
    roster.assign(ids.begin(), ids.end());
  } else {
    std::erase_if(roster, [&](const std::string& id) { return excluded.contains(id); });
  }
  const auto index = io_detail::roster_index(roster);
  const auto n = roster.size();

  std::int64_t min_ts = 0;
  std::int64_t max_ts = 0;
  bool any = false;
  // (bucket, a, b) -> timestamps
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::vector<std::int64_t>> runs;
  std::vector<std::tuple<std::int64_t, std::size_t, std::size_t>> kept;
  for (const auto& e : events) {
    if (e.i == e.j) throw DataError("contact of '" + e.i + "' with itself at " + std::to_string(e.timestamp));
    if (e.timestamp < 0) throw DataError("negative timestamp " + std::to_string(e.timestamp));
    if (excluded.contains(e.i) || excluded.contains(e.j)) continue;
    const auto a = index.find(e.i);
    const auto b = index.find(e.j);
    if (a == index.end() || b == index.end()) {
      throw DataError("contact at " + std::to_string(e.timestamp) + " names unknown node '" +
                      (a == index.end() ? e.i : e.j) + "'");
    }
    min_ts = any ? std::min(min_ts, e.timestamp) : e.timestamp;
    max_ts = any ? std::max(max_ts, e.timestamp) : e.timestamp;
    any = true;
    kept.emplace_back(e.timestamp, std::min(a->second, b->second), std::max(a->second, b->second));
  }
  const std::int64_t origin = opt.origin ? *opt.origin : (any ? min_ts / opt.bucket * opt.bucket : 0);
  if (any && min_ts < origin) throw DataError("contact at " + std::to_string(min_ts) + " precedes the origin");
  const std::size_t last = any ? static_cast<std::size_t>((max_ts - origin) / opt.bucket) : 0;
  const std::size_t T = opt.buckets ? *opt.buckets : last + 1;
  if (T == 0) throw SpecError("series needs at least one bucket");

  NetworkSeries series;
  series.nodes = roster;
  series.networks.assign(T, ValuedNetwork(n, Orientation::undirected));
  for (const auto& [ts, a, b] : kept) {
    const auto bucket = static_cast<std::size_t>((ts - origin) / opt.bucket);
    if (bucket >= T) continue;
    runs[{bucket, a, b}].push_back(ts);
  }
  for (auto& [key, times] : runs) {
    std::sort(times.begin(), times.end());
    Count contacts = 1;
    for (std::size_t k = 1; k < times.size(); ++k) {
      if (times[k] - times[k - 1] > opt.merge_gap) ++contacts;
    }
    const auto& [bucket, a, b] = key;
    series.networks[bucket].set(a, b, contacts);
  }
  return series;
}

// Whitespace "i j [value]" pairs (value defaults to 1) into a dense dyadic
// covariate over `nodes`; pairs naming nodes outside the roster are skipped.
inline std::vector<double> parse_pair_covariate(const std::string& text, const std::vector<std::string>& nodes,
                                                bool directed, const std::filesystem::path& source = "<pairs>") {
  const auto index = io_detail::roster_index(nodes);
  const auto n = nodes.size();
  std::vector<double> out(n * n, 0.0);
  io_detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    const auto cells = io_detail::split_ws(line);
    if (cells.empty()) return;
    if (cells.size() < 2 || cells.size() > 3) throw DataError(io_detail::where(source, line_no) + "expected 'i j [value]'");
    double v = 1.0;
    if (cells.size() == 3 && !io_detail::parse_number(cells[2], v)) {
      throw DataError(io_detail::where(source, line_no) + "bad value '" + std::string(cells[2]) + "'");
    }
    const auto a = index.find(std::string(cells[0]));
    const auto b = index.find(std::string(cells[1]));
    if (a == index.end() || b == index.end() || a->second == b->second) return;
    out[a->second * n + b->second] = v;
    if (!directed) out[b->second * n + a->second] = v;
  });
  return out;
}

}  // namespace pstergm
