#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pstergm/error.hpp"

namespace pstergm {

// Dyad counts. No upper bound is imposed on the augmentation side.
using Count = std::int64_t;

enum class Orientation { directed, undirected };

inline const char* orientation_name(Orientation o) {
  return o == Orientation::directed ? "directed" : "undirected";
}

// Square matrix of nonnegative integer dyad counts with zero diagonal.
//
// Undirected networks keep the full symmetric matrix; set() mirrors writes so
// (i,j) and (j,i) always agree. The raw-values constructor does no checking so
// that malformed data can be loaded and then reported by validate_series().
class ValuedNetwork {
 public:
  ValuedNetwork() = default;

  ValuedNetwork(std::size_t n, Orientation orientation)
      : n_(n), orientation_(orientation), values_(n * n, 0) {}

  ValuedNetwork(std::size_t n, Orientation orientation, std::vector<Count> values)
      : n_(n), orientation_(orientation), values_(std::move(values)) {
    if (values_.size() != n * n) {
      throw DataError("network value buffer has " + std::to_string(values_.size()) +
                      " entries, expected " + std::to_string(n * n));
    }
  }

  // All off-diagonal dyads set to `value`; the sampler's default start is filled(n, o, 1).
  static ValuedNetwork filled(std::size_t n, Orientation orientation, Count value) {
    ValuedNetwork net(n, orientation);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) net.values_[i * n + j] = value;
      }
    }
    return net;
  }

  std::size_t size() const { return n_; }
  Orientation orientation() const { return orientation_; }
  bool directed() const { return orientation_ == Orientation::directed; }

  Count operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }

  void set(std::size_t i, std::size_t j, Count value) {
    if (i >= n_ || j >= n_) throw DataError("dyad index out of range");
    if (i == j) throw DataError("self-dyads are not allowed");
    if (value < 0) throw DataError("dyad values must be nonnegative");
    values_[i * n_ + j] = value;
    if (!directed()) values_[j * n_ + i] = value;
  }

  std::span<const Count> values() const { return values_; }

  // Number of free dyads: ordered pairs when directed, unordered pairs otherwise.
  std::size_t dyad_count() const {
    if (n_ == 0) return 0;
    return directed() ? n_ * (n_ - 1) : n_ * (n_ - 1) / 2;
  }

  Count max_value() const {
    return values_.empty() ? 0 : *std::max_element(values_.begin(), values_.end());
  }

  // Visits canonical dyads: i<j when undirected, all i != j when directed.
  template <class Fn>
  void for_each_dyad(Fn&& fn) const {
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = directed() ? 0 : i + 1; j < n_; ++j) {
        if (i != j) fn(i, j, values_[i * n_ + j]);
      }
    }
  }

  friend bool operator==(const ValuedNetwork&, const ValuedNetwork&) = default;

 private:
  std::size_t n_ = 0;
  Orientation orientation_ = Orientation::directed;
  std::vector<Count> values_;
};

// Nodal attributes are categorical strings (empty string = missing); dyadic
// covariates are n*n row-major real matrices and may hold any real value.
struct Covariates {
  std::map<std::string, std::vector<std::string>> nodal;
  std::map<std::string, std::vector<double>> dyadic;

  friend bool operator==(const Covariates&, const Covariates&) = default;
};

// Ordered networks y^1..y^T on a fixed node set. Time indices are 1-based in
// every public API, matching the usual y^t notation; node indices are 0-based.
struct NetworkSeries {
  std::vector<ValuedNetwork> networks;
  std::vector<std::string> nodes;  // roster names, index-aligned with matrix rows
  Covariates covariates;

  std::size_t length() const { return networks.size(); }
  std::size_t node_count() const { return networks.empty() ? nodes.size() : networks.front().size(); }
  Orientation orientation() const {
    return networks.empty() ? Orientation::undirected : networks.front().orientation();
  }

  const ValuedNetwork& at(std::size_t t) const {
    if (t < 1 || t > networks.size()) {
      throw DataError("time index " + std::to_string(t) + " outside 1.." +
                      std::to_string(networks.size()));
    }
    return networks[t - 1];
  }

  friend bool operator==(const NetworkSeries&, const NetworkSeries&) = default;
};

struct Violation {
  std::size_t t = 0;  // 1-based network index, 0 when the violation is not tied to one network
  std::size_t i = 0;
  std::size_t j = 0;
  std::string rule;
  std::string message;
};

inline std::vector<Violation> validate_network(const ValuedNetwork& net, std::size_t t) {
  std::vector<Violation> out;
  const auto n = net.size();
  const auto ts = std::to_string(t);
  for (std::size_t i = 0; i < n; ++i) {
    if (net(i, i) != 0) {
      out.push_back({t, i, i, "nonzero diagonal",
                     "nonzero diagonal at t=" + ts + ", node " + std::to_string(i)});
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (net(i, j) < 0) {
        out.push_back({t, i, j, "negative value",
                       "negative value at t=" + ts + ", dyad (" + std::to_string(i) + "," +
                           std::to_string(j) + ")"});
      }
      if (!net.directed() && i < j && net(i, j) != net(j, i)) {
        out.push_back({t, i, j, "asymmetry",
                       "asymmetry at t=" + ts + ", dyad (" + std::to_string(i) + "," +
                           std::to_string(j) + "): " + std::to_string(net(i, j)) +
                           " vs " + std::to_string(net(j, i))});
      }
    }
  }
  return out;
}

// Empty result iff every network and covariate invariant holds.
inline std::vector<Violation> validate_series(const NetworkSeries& series) {
  std::vector<Violation> out;
  if (series.networks.empty()) {
    out.push_back({0, 0, 0, "empty series", "series holds no networks"});
    return out;
  }
  const auto n = series.networks.front().size();
  const auto orient = series.networks.front().orientation();
  for (std::size_t t = 1; t <= series.networks.size(); ++t) {
    const auto& net = series.networks[t - 1];
    if (net.size() != n) {
      out.push_back({t, 0, 0, "size mismatch",
                     "network at t=" + std::to_string(t) + " has " + std::to_string(net.size()) +
                         " nodes, expected " + std::to_string(n)});
      continue;
    }
    if (net.orientation() != orient) {
      out.push_back({t, 0, 0, "orientation mismatch",
                     "network at t=" + std::to_string(t) + " is " +
                         orientation_name(net.orientation())});
    }
    auto v = validate_network(net, t);
    out.insert(out.end(), v.begin(), v.end());
  }
  if (!series.nodes.empty() && series.nodes.size() != n) {
    out.push_back({0, 0, 0, "roster size",
                   "roster lists " + std::to_string(series.nodes.size()) + " nodes, networks have " +
                       std::to_string(n)});
  }
  for (const auto& [name, values] : series.covariates.nodal) {
    if (values.size() != n) {
      out.push_back({0, 0, 0, "attribute length", "nodal attribute '" + name + "' has " +
                                                       std::to_string(values.size()) + " values"});
    }
  }
  for (const auto& [name, m] : series.covariates.dyadic) {
    if (m.size() != n * n) {
      out.push_back({0, 0, 0, "covariate shape", "dyadic covariate '" + name + "' is not n x n"});
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (m[i * n + i] != 0.0) {
        out.push_back({0, i, i, "covariate diagonal",
                       "dyadic covariate '" + name + "' nonzero diagonal at node " +
                           std::to_string(i)});
      }
      if (orient == Orientation::undirected) {
        for (std::size_t j = i + 1; j < n; ++j) {
          if (m[i * n + j] != m[j * n + i]) {
            out.push_back({0, i, j, "covariate asymmetry",
                           "dyadic covariate '" + name + "' asymmetric at (" + std::to_string(i) +
                               "," + std::to_string(j) + ")"});
          }
        }
      }
    }
  }
  return out;
}

// Largest diminution dyad min(y^{t-1}_ij, y^t_ij) for the interval ending at t (2 <= t <= T).
inline Count max_dim_value(const NetworkSeries& series, std::size_t t) {
  if (t < 2 || t > series.length()) {
    throw DataError("interval index " + std::to_string(t) + " outside 2.." +
                    std::to_string(series.length()));
  }
  const auto prev = series.at(t - 1).values();
  const auto cur = series.at(t).values();
  Count best = 0;
  for (std::size_t k = 0; k < prev.size(); ++k) best = std::max(best, std::min(prev[k], cur[k]));
  return best;
}

}  // namespace pstergm
