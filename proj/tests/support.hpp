#pragma once

// Shared fixtures and independent oracles for the test suite. The oracles are
// written from the statistic definitions with plain loops and deliberately
// share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <random>
#include <string>
#include <vector>

#include "pstergm/pstergm.hpp"

namespace pst_test {

using namespace pstergm;

inline ValuedNetwork random_network(std::size_t n, Orientation o, Count max_value, std::mt19937_64& rng,
                                    double zero_prob = 0.3) {
  ValuedNetwork y(n, o);
  std::uniform_int_distribution<Count> value(1, max_value);
  std::bernoulli_distribution zero(zero_prob);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || (o == Orientation::undirected && j < i)) continue;
      y.set(i, j, zero(rng) ? 0 : value(rng));
    }
  }
  return y;
}

// Attribute "sex" in {F, M} (with one missing value when n > 3) and a 0/1
// dyadic covariate "tie" that is symmetric for undirected networks.
inline Covariates random_covariates(std::size_t n, Orientation o, std::mt19937_64& rng) {
  Covariates c;
  std::bernoulli_distribution coin(0.5);
  auto& sex = c.nodal["sex"];
  for (std::size_t i = 0; i < n; ++i) sex.push_back(coin(rng) ? "M" : "F");
  if (n > 3) sex[3] = "";
  auto& tie = c.dyadic["tie"];
  tie.assign(n * n, 0.0);
  std::uniform_real_distribution<double> w(-1.0, 2.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || (o == Orientation::undirected && j < i)) continue;
      tie[i * n + j] = coin(rng) ? w(rng) : 0.0;
      if (o == Orientation::undirected) tie[j * n + i] = tie[i * n + j];
    }
  }
  return c;
}

inline std::vector<StatisticSpec> every_kind(Orientation o) {
  std::vector<StatisticSpec> out{StatisticSpec::of(StatKind::edge_sum), StatisticSpec::of(StatKind::dispersion),
                                 StatisticSpec::of(StatKind::propensity),
                                 StatisticSpec::of(StatKind::transitive_weight),
                                 StatisticSpec::homophily("sex", "M"),
                                 StatisticSpec::heterophily("sex"),
                                 StatisticSpec::heterophily("sex", "M", "F"),
                                 StatisticSpec::dyadic("tie")};
  if (o == Orientation::directed) out.push_back(StatisticSpec::of(StatKind::mutuality));
  return out;
}

// Dyads summed by the statistic table: i<j when undirected, all i!=j when directed.
template <class Fn>
void oracle_pairs(const ValuedNetwork& y, Fn&& fn) {
  const auto n = y.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (!y.directed() && j < i) continue;
      fn(i, j);
    }
  }
}

inline double oracle_statistic(const StatisticSpec& s, const ValuedNetwork& y, const Covariates& c) {
  const auto n = y.size();
  double total = 0;
  auto value = [&](std::size_t i, std::size_t j) { return static_cast<double>(y(i, j)); };
  switch (s.kind) {
    case StatKind::edge_sum:
      oracle_pairs(y, [&](auto i, auto j) { total += value(i, j); });
      break;
    case StatKind::dispersion:
      oracle_pairs(y, [&](auto i, auto j) { total += std::sqrt(value(i, j)); });
      break;
    case StatKind::propensity:
      oracle_pairs(y, [&](auto i, auto j) { total += value(i, j) > 0 ? 1 : 0; });
      break;
    case StatKind::mutuality:
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) total += std::sqrt(value(i, j) * value(j, i));
      break;
    case StatKind::transitive_weight:
      oracle_pairs(y, [&](auto i, auto j) {
        double best = 0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == i || k == j) continue;
          best = std::max(best, std::min(value(i, k), value(k, j)));
        }
        total += std::min(value(i, j), best);
      });
      break;
    case StatKind::homophily: {
      const auto& x = c.nodal.at(s.attr);
      oracle_pairs(y, [&](auto i, auto j) {
        if (x[i] == s.level && x[j] == s.level) total += value(i, j);
      });
      break;
    }
    case StatKind::heterophily: {
      const auto& x = c.nodal.at(s.attr);
      oracle_pairs(y, [&](auto i, auto j) {
        if (x[i].empty() || x[j].empty()) return;
        const bool hit = s.level.empty() ? x[i] != x[j]
                                         : (x[i] == s.level && x[j] == s.other_level) ||
                                               (x[i] == s.other_level && x[j] == s.level);
        if (hit) total += value(i, j);
      });
      break;
    }
    case StatKind::dyadic_cov: {
      const auto& e = c.dyadic.at(s.covariate);
      oracle_pairs(y, [&](auto i, auto j) { total += value(i, j) * e[i * n + j]; });
      break;
    }
  }
  return total;
}

inline bool integer_kind(StatKind k) {
  return k != StatKind::dispersion && k != StatKind::mutuality && k != StatKind::dyadic_cov;
}

// log of the unnormalized transition density h+(y+) h-(y-) exp(eta+.g+ + eta-.g-)
// for a model given as (spec, covariates); -inf outside the cap.
inline double oracle_log_density(const std::vector<StatisticSpec>& aug, const std::vector<StatisticSpec>& dim,
                                 const ParamVector& eta, const ValuedNetwork& prev, const ValuedNetwork& y,
                                 const Covariates& c, Count cap) {
  const auto n = y.size();
  ValuedNetwork plus(n, y.orientation());
  ValuedNetwork minus(n, y.orientation());
  double log_h = 0;
  bool outside = false;
  oracle_pairs(y, [&](auto i, auto j) {
    const Count a = std::max(prev(i, j), y(i, j));
    const Count d = std::min(prev(i, j), y(i, j));
    plus.set(i, j, a);
    minus.set(i, j, d);
    if (d > cap) {
      outside = true;
      return;
    }
    log_h += -std::lgamma(static_cast<double>(a) + 1) + std::lgamma(static_cast<double>(cap) + 1) -
             std::lgamma(static_cast<double>(d) + 1) - std::lgamma(static_cast<double>(cap - d) + 1);
  });
  if (outside) return -INFINITY;
  double lin = 0;
  for (std::size_t k = 0; k < aug.size(); ++k) lin += eta.plus[k] * oracle_statistic(aug[k], plus, c);
  for (std::size_t k = 0; k < dim.size(); ++k) lin += eta.minus[k] * oracle_statistic(dim[k], minus, c);
  return log_h + lin;
}

inline double oracle_log_q(Count from, Count to, double pi0) {
  const double lambda = static_cast<double>(from) + 0.5;
  const double pois = -lambda + static_cast<double>(to) * std::log(lambda) - std::lgamma(static_cast<double>(to) + 1);
  return to == 0 ? std::log(pi0 + (1 - pi0) * std::exp(-lambda)) : std::log(1 - pi0) + pois;
}

// Upper-tail chi-square probability via the regularized incomplete gamma series.
inline double chi_square_sf(double x, double dof) {
  const double a = dof / 2.0;
  const double z = x / 2.0;
  if (z <= 0) return 1.0;
  if (z < a + 1) {
    double term = 1.0 / a;
    double sum = term;
    for (int k = 1; k < 10000; ++k) {
      term *= z / (a + k);
      sum += term;
      if (term < sum * 1e-15) break;
    }
    return 1.0 - std::exp(-z + a * std::log(z) - std::lgamma(a)) * sum;
  }
  // Continued fraction for the upper tail.
  double b = z + 1 - a;
  double c = 1e300;
  double d = 1 / b;
  double h = d;
  for (int k = 1; k < 10000; ++k) {
    const double an = -k * (k - a);
    b += 2;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1) < 1e-15) break;
  }
  return std::exp(-z + a * std::log(z) - std::lgamma(a)) * h;
}

// Chi-square p-value of counts against probabilities, pooling cells with
// expected count below 5 into their neighbour.
inline double chi_square_p(const std::vector<double>& observed, const std::vector<double>& probs, double total) {
  std::vector<double> o, e;
  double acc_o = 0, acc_e = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    acc_o += observed[k];
    acc_e += probs[k] * total;
    if (acc_e >= 5) {
      o.push_back(acc_o);
      e.push_back(acc_e);
      acc_o = acc_e = 0;
    }
  }
  if (acc_e > 0 || acc_o > 0) {
    if (e.empty()) return 1.0;
    o.back() += acc_o;
    e.back() += acc_e;
  }
  double stat = 0;
  for (std::size_t k = 0; k < o.size(); ++k) stat += (o[k] - e[k]) * (o[k] - e[k]) / e[k];
  return chi_square_sf(stat, static_cast<double>(o.size() - 1));
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("pstergm-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

}  // namespace pst_test
