#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pstergm/error.hpp"
#include "pstergm/network.hpp"

namespace pstergm {

// Network statistics for valued networks. Sums run over i<j when undirected
// and over all ordered pairs i != j when directed; mutuality always sums i<j.
//
//   edge_sum           y_ij
//   dispersion         sqrt(y_ij)
//   propensity         I(y_ij > 0)
//   mutuality          sqrt(y_ij * y_ji)                      (directed only)
//   transitive_weight  min(y_ij, max_k min(y_ik, y_kj))
//   homophily          y_ij * I(x_i = L and x_j = L)
//   heterophily        y_ij * I(x_i != x_j), or I({x_i, x_j} = {A, B}) with a level pair
//   dyadic_cov         y_ij * e_ij
enum class StatKind {
  edge_sum,
  dispersion,
  propensity,
  mutuality,
  transitive_weight,
  homophily,
  heterophily,
  dyadic_cov,
};

inline constexpr std::string_view kind_name(StatKind k) {
  switch (k) {
    case StatKind::edge_sum: return "edge_sum";
    case StatKind::dispersion: return "dispersion";
    case StatKind::propensity: return "propensity";
    case StatKind::mutuality: return "mutuality";
    case StatKind::transitive_weight: return "transitive_weight";
    case StatKind::homophily: return "homophily";
    case StatKind::heterophily: return "heterophily";
    case StatKind::dyadic_cov: return "dyadic_cov";
  }
  return "unknown";
}

inline constexpr StatKind all_kinds[] = {
    StatKind::edge_sum,          StatKind::dispersion, StatKind::propensity,
    StatKind::mutuality,         StatKind::transitive_weight, StatKind::homophily,
    StatKind::heterophily,       StatKind::dyadic_cov,
};

inline std::optional<StatKind> parse_kind(std::string_view name) {
  for (auto k : all_kinds) {
    if (kind_name(k) == name) return k;
  }
  return std::nullopt;
}

struct StatisticSpec {
  StatKind kind = StatKind::edge_sum;
  std::string attr;         // homophily / heterophily
  std::string level;        // homophily level; first heterophily level
  std::string other_level;  // second heterophily level
  std::string covariate;    // dyadic_cov

  static StatisticSpec of(StatKind k) { return {k, {}, {}, {}, {}}; }
  static StatisticSpec homophily(std::string attr, std::string level) {
    return {StatKind::homophily, std::move(attr), std::move(level), {}, {}};
  }
  static StatisticSpec heterophily(std::string attr, std::string a = {}, std::string b = {}) {
    return {StatKind::heterophily, std::move(attr), std::move(a), std::move(b), {}};
  }
  static StatisticSpec dyadic(std::string covariate) {
    return {StatKind::dyadic_cov, {}, {}, {}, std::move(covariate)};
  }

  // Canonical text form, also accepted by parse_statistic():
  //   edge_sum | homophily:gender=M | heterophily:gender | heterophily:gender=M,F | dyadic_cov:facebook
  std::string label() const {
    std::string out(kind_name(kind));
    switch (kind) {
      case StatKind::homophily: out += ":" + attr + "=" + level; break;
      case StatKind::heterophily:
        out += ":" + attr;
        if (!level.empty()) out += "=" + level + "," + other_level;
        break;
      case StatKind::dyadic_cov: out += ":" + covariate; break;
      default: break;
    }
    return out;
  }

  friend bool operator==(const StatisticSpec&, const StatisticSpec&) = default;
};

inline StatisticSpec parse_statistic(std::string_view text) {
  const auto colon = text.find(':');
  const auto head = text.substr(0, colon);
  const auto kind = parse_kind(head);
  if (!kind) throw SpecError("unknown statistic kind '" + std::string(head) + "'");
  StatisticSpec spec = StatisticSpec::of(*kind);
  const std::string_view rest = colon == std::string_view::npos ? "" : text.substr(colon + 1);
  switch (*kind) {
    case StatKind::homophily: {
      const auto eq = rest.find('=');
      if (eq == std::string_view::npos || eq == 0 || eq + 1 == rest.size()) {
        throw SpecError("homophily needs attr=level, got '" + std::string(text) + "'");
      }
      spec.attr = rest.substr(0, eq);
      spec.level = rest.substr(eq + 1);
      break;
    }
    case StatKind::heterophily: {
      const auto eq = rest.find('=');
      spec.attr = rest.substr(0, eq);
      if (spec.attr.empty()) throw SpecError("heterophily needs an attribute name");
      if (eq != std::string_view::npos) {
        const auto levels = rest.substr(eq + 1);
        const auto comma = levels.find(',');
        if (comma == std::string_view::npos) {
          throw SpecError("heterophily level pair must be written A,B");
        }
        spec.level = levels.substr(0, comma);
        spec.other_level = levels.substr(comma + 1);
      }
      break;
    }
    case StatKind::dyadic_cov:
      if (rest.empty()) throw SpecError("dyadic_cov needs a covariate name");
      spec.covariate = rest;
      break;
    default:
      if (!rest.empty()) {
        throw SpecError("statistic '" + std::string(head) + "' takes no binding");
      }
  }
  return spec;
}

namespace detail {

// max_k min(y_ak, y_kb), optionally skipping one intermediate node.
inline Count two_path_max(const ValuedNetwork& y, std::size_t a, std::size_t b,
                          std::size_t skip) {
  const auto n = y.size();
  Count best = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k == skip) continue;
    const Count v = std::min(y(a, k), y(k, b));
    if (v > best) best = v;
  }
  return best;
}

inline double transitive_weight(const ValuedNetwork& y) {
  double total = 0;
  y.for_each_dyad([&](std::size_t i, std::size_t j, Count v) {
    if (v == 0) return;
    total += static_cast<double>(std::min(v, two_path_max(y, i, j, y.size())));
  });
  return total;
}

// Change in transitive weight when y_ij goes from old_v to new_v; y holds old_v.
// Only the pair itself and pairs (i,x), (x,j) route a two-path through the dyad.
inline double transitive_weight_change(const ValuedNetwork& y, std::size_t i, std::size_t j,
                                       Count old_v, Count new_v) {
  const auto n = y.size();
  const Count through = two_path_max(y, i, j, n);
  double delta = static_cast<double>(std::min(new_v, through) - std::min(old_v, through));
  for (std::size_t x = 0; x < n; ++x) {
    if (x == i || x == j) continue;
    if (const Count yix = y(i, x); yix != 0) {
      const Count yjx = y(j, x);
      const Count a_old = std::min(old_v, yjx);
      const Count a_new = std::min(new_v, yjx);
      if (a_old != a_new) {
        const Count rest = two_path_max(y, i, x, j);
        delta += static_cast<double>(std::min(yix, std::max(rest, a_new)) -
                                     std::min(yix, std::max(rest, a_old)));
      }
    }
    if (const Count yxj = y(x, j); yxj != 0) {
      const Count yxi = y(x, i);
      const Count b_old = std::min(yxi, old_v);
      const Count b_new = std::min(yxi, new_v);
      if (b_old != b_new) {
        const Count rest = two_path_max(y, x, j, i);
        delta += static_cast<double>(std::min(yxj, std::max(rest, b_new)) -
                                     std::min(yxj, std::max(rest, b_old)));
      }
    }
  }
  return delta;
}

inline double sqrt_count(Count v) { return std::sqrt(static_cast<double>(v)); }

}  // namespace detail

// A statistic bound to a node set: covariate-dependent kinds carry a dense
// dyad weight matrix so evaluation never looks up attributes.
class BoundStatistic {
 public:
  BoundStatistic(const StatisticSpec& spec, const Covariates& covs, std::size_t n,
                 Orientation orientation)
      : spec_(spec) {
    switch (spec.kind) {
      case StatKind::mutuality:
        if (orientation != Orientation::directed) {
          throw SpecError("mutuality is only defined for directed networks");
        }
        break;
      case StatKind::homophily:
      case StatKind::heterophily: {
        const auto it = covs.nodal.find(spec.attr);
        if (spec.attr.empty() || it == covs.nodal.end()) {
          throw SpecError("statistic " + spec.label() + " refers to unknown nodal attribute '" +
                          spec.attr + "'");
        }
        if (spec.kind == StatKind::homophily && spec.level.empty()) {
          throw SpecError("homophily needs a level");
        }
        const auto& x = it->second;
        if (x.size() != n) throw SpecError("nodal attribute '" + spec.attr + "' has wrong length");
        weights_.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            if (i == j || x[i].empty() || x[j].empty()) continue;
            bool hit = false;
            if (spec.kind == StatKind::homophily) {
              hit = x[i] == spec.level && x[j] == spec.level;
            } else if (spec.level.empty()) {
              hit = x[i] != x[j];
            } else {
              hit = (x[i] == spec.level && x[j] == spec.other_level) ||
                    (x[i] == spec.other_level && x[j] == spec.level);
            }
            weights_[i * n + j] = hit ? 1.0 : 0.0;
          }
        }
        break;
      }
      case StatKind::dyadic_cov: {
        const auto it = covs.dyadic.find(spec.covariate);
        if (spec.covariate.empty() || it == covs.dyadic.end()) {
          throw SpecError("statistic " + spec.label() + " refers to unknown dyadic covariate '" +
                          spec.covariate + "'");
        }
        if (it->second.size() != n * n) {
          throw SpecError("dyadic covariate '" + spec.covariate + "' is not n x n");
        }
        weights_ = it->second;
        break;
      }
      default:
        break;
    }
  }

  const StatisticSpec& spec() const { return spec_; }

  double evaluate(const ValuedNetwork& y) const {
    double total = 0;
    switch (spec_.kind) {
      case StatKind::edge_sum:
        y.for_each_dyad([&](std::size_t, std::size_t, Count v) { total += static_cast<double>(v); });
        return total;
      case StatKind::dispersion:
        y.for_each_dyad([&](std::size_t, std::size_t, Count v) { total += detail::sqrt_count(v); });
        return total;
      case StatKind::propensity:
        y.for_each_dyad([&](std::size_t, std::size_t, Count v) { total += v > 0 ? 1.0 : 0.0; });
        return total;
      case StatKind::mutuality:
        for (std::size_t i = 0; i < y.size(); ++i) {
          for (std::size_t j = i + 1; j < y.size(); ++j) {
            total += std::sqrt(static_cast<double>(y(i, j)) * static_cast<double>(y(j, i)));
          }
        }
        return total;
      case StatKind::transitive_weight:
        return detail::transitive_weight(y);
      case StatKind::homophily:
      case StatKind::heterophily:
      case StatKind::dyadic_cov: {
        const auto n = y.size();
        y.for_each_dyad([&](std::size_t i, std::size_t j, Count v) {
          if (v != 0) total += weights_[i * n + j] * static_cast<double>(v);
        });
        return total;
      }
    }
    return total;
  }

  // g(y with y_ij = new_v) - g(y with y_ij = old_v); y currently holds old_v at (i,j).
  double change(const ValuedNetwork& y, std::size_t i, std::size_t j, Count old_v,
                Count new_v) const {
    if (old_v == new_v) return 0.0;
    switch (spec_.kind) {
      case StatKind::edge_sum:
        return static_cast<double>(new_v - old_v);
      case StatKind::dispersion:
        return detail::sqrt_count(new_v) - detail::sqrt_count(old_v);
      case StatKind::propensity:
        return (new_v > 0 ? 1.0 : 0.0) - (old_v > 0 ? 1.0 : 0.0);
      case StatKind::mutuality: {
        const auto back = static_cast<double>(y(j, i));
        return std::sqrt(static_cast<double>(new_v) * back) -
               std::sqrt(static_cast<double>(old_v) * back);
      }
      case StatKind::transitive_weight:
        return detail::transitive_weight_change(y, i, j, old_v, new_v);
      case StatKind::homophily:
      case StatKind::heterophily:
      case StatKind::dyadic_cov:
        return weights_[i * y.size() + j] * static_cast<double>(new_v - old_v);
    }
    return 0.0;
  }

 private:
  StatisticSpec spec_;
  std::vector<double> weights_;
};

// Ordered list of bound statistics for one process (augmentation or diminution).
class StatisticSet {
 public:
  StatisticSet() = default;

  StatisticSet(const std::vector<StatisticSpec>& specs, const Covariates& covs, std::size_t n,
               Orientation orientation) {
    stats_.reserve(specs.size());
    for (const auto& s : specs) stats_.emplace_back(s, covs, n, orientation);
  }

  std::size_t size() const { return stats_.size(); }
  bool empty() const { return stats_.empty(); }
  const BoundStatistic& operator[](std::size_t k) const { return stats_[k]; }

  std::vector<double> evaluate(const ValuedNetwork& y) const {
    std::vector<double> out(stats_.size());
    evaluate_into(y, out);
    return out;
  }

  void evaluate_into(const ValuedNetwork& y, std::span<double> out) const {
    for (std::size_t k = 0; k < stats_.size(); ++k) out[k] = stats_[k].evaluate(y);
  }

  void change_into(const ValuedNetwork& y, std::size_t i, std::size_t j, Count old_v, Count new_v,
                   std::span<double> out) const {
    for (std::size_t k = 0; k < stats_.size(); ++k) out[k] = stats_[k].change(y, i, j, old_v, new_v);
  }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (const auto& s : stats_) out.push_back(s.spec().label());
    return out;
  }

 private:
  std::vector<BoundStatistic> stats_;
};

inline double evaluate(const StatisticSpec& spec, const ValuedNetwork& net, const Covariates& covs) {
  return BoundStatistic(spec, covs, net.size(), net.orientation()).evaluate(net);
}

inline std::vector<double> evaluate_vector(const std::vector<StatisticSpec>& specs,
                                           const ValuedNetwork& net, const Covariates& covs) {
  return StatisticSet(specs, covs, net.size(), net.orientation()).evaluate(net);
}

inline std::vector<double> change_statistics(const std::vector<StatisticSpec>& specs,
                                             const ValuedNetwork& net, std::size_t i,
                                             std::size_t j, Count old_v, Count new_v,
                                             const Covariates& covs) {
  if (i == j) throw DataError("change statistics need i != j");
  if (i >= net.size() || j >= net.size()) throw DataError("dyad index out of range");
  const StatisticSet set(specs, covs, net.size(), net.orientation());
  std::vector<double> out(set.size());
  set.change_into(net, i, j, old_v, new_v, out);
  return out;
}

}  // namespace pstergm
