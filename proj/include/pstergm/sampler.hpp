#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pstergm/dynamics.hpp"
#include "pstergm/error.hpp"
#include "pstergm/model.hpp"
#include "pstergm/network.hpp"
#include "pstergm/random.hpp"
#include "pstergm/stats.hpp"

namespace pstergm {

// Zero-inflated Poisson proposal: with probability pi0 jump to 0, otherwise
// draw Poisson(current + lambda_offset).
struct ProposalConfig {
  double pi0 = 0.2;
  double lambda_offset = 0.5;

  void validate() const {
    if (!(pi0 >= 0.0 && pi0 < 1.0)) throw SpecError("pi0 must lie in [0, 1)");
    if (!(lambda_offset > 0.0)) throw SpecError("lambda offset must be positive");
  }
};

inline double log_factorial(Count v) {
  static const auto table = [] {
    std::array<double, 1024> t{};
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = std::lgamma(static_cast<double>(k) + 1.0);
    return t;
  }();
  if (v >= 0 && v < static_cast<Count>(table.size())) return table[static_cast<std::size_t>(v)];
  return std::lgamma(static_cast<double>(v) + 1.0);
}

// log C(m, k); -inf outside 0..m.
inline double log_binomial(Count m, Count k) {
  if (k < 0 || k > m) return -std::numeric_limits<double>::infinity();
  return log_factorial(m) - log_factorial(k) - log_factorial(m - k);
}

inline double log_proposal_pmf(Count value, double lambda, double pi0) {
  if (!(lambda > 0.0)) throw std::domain_error("proposal rate must be positive");
  if (value < 0) return -std::numeric_limits<double>::infinity();
  if (value == 0) return std::log(pi0 + (1.0 - pi0) * std::exp(-lambda));
  return std::log1p(-pi0) - lambda + static_cast<double>(value) * std::log(lambda) -
         log_factorial(value);
}

inline double proposal_pmf(Count value, double lambda, double pi0) {
  return std::exp(log_proposal_pmf(value, lambda, pi0));
}

inline Count propose_value(Count current, const ProposalConfig& cfg, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (cfg.pi0 > 0.0 && unit(rng) < cfg.pi0) return 0;
  std::poisson_distribution<Count> draw(static_cast<double>(current) + cfg.lambda_offset);
  return draw(rng);
}

// A ModelSpec bound to a node set and covariates. Shared read-only by chains.
struct BoundModel {
  StatisticSet aug;
  StatisticSet dim;
  ProposalConfig proposal;

  BoundModel(const ModelSpec& spec, const Covariates& covs, std::size_t n,
             Orientation orientation)
      : aug(spec.aug_stats, covs, n, orientation),
        dim(spec.dim_stats, covs, n, orientation),
        proposal{spec.pi0, 0.5} {
    spec.validate();
  }

  BoundModel(StatisticSet aug_set, StatisticSet dim_set, ProposalConfig cfg = {})
      : aug(std::move(aug_set)), dim(std::move(dim_set)), proposal(cfg) {
    proposal.validate();
  }

  std::size_t p_plus() const { return aug.size(); }
  std::size_t p_minus() const { return dim.size(); }
  std::size_t p() const { return aug.size() + dim.size(); }

  // [g+(y+), g-(y-)] for y relative to prev.
  Eigen::VectorXd statistics(const ValuedNetwork& prev, const ValuedNetwork& y) const {
    const auto pair = decompose(prev, y);
    Eigen::VectorXd out(static_cast<Eigen::Index>(p()));
    aug.evaluate_into(pair.aug, std::span<double>(out.data(), aug.size()));
    dim.evaluate_into(pair.dim, std::span<double>(out.data() + aug.size(), dim.size()));
    return out;
  }
};

// Metropolis-Hastings chain over y^t given y^{t-1}. Holds the current network,
// its transition pair and cached statistics, all kept in sync on every accept.
class Chain {
 public:
  Chain(const ValuedNetwork& prev, ValuedNetwork start, const BoundModel& model, Count cap)
      : model_(&model), cap_(cap), current_(std::move(start)) {
    require_compatible(prev, current_);
    if (prev.size() < 2) throw DataError("sampling needs at least two nodes");
    if (cap < 0) throw SpecError("diminution cap must be nonnegative");
    pair_ = decompose(prev, current_);
    g_plus_ = model.aug.evaluate(pair_.aug);
    g_minus_ = model.dim.evaluate(pair_.dim);
    d_plus_.assign(g_plus_.size(), 0.0);
    d_minus_.assign(g_minus_.size(), 0.0);
  }

  // Copies share the borrowed prev network, so one chain built at the observed
  // network can seed many independent draws.

  const ValuedNetwork& prev() const { return *pair_.prev; }
  const ValuedNetwork& current() const { return current_; }
  const TransitionPair& pair() const { return pair_; }
  std::span<const double> aug_statistics() const { return g_plus_; }
  std::span<const double> dim_statistics() const { return g_minus_; }
  Count cap() const { return cap_; }

  Eigen::VectorXd statistics() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(g_plus_.size() + g_minus_.size()));
    Eigen::Index k = 0;
    for (double v : g_plus_) out[k++] = v;
    for (double v : g_minus_) out[k++] = v;
    return out;
  }

  std::size_t steps() const { return steps_; }
  std::size_t accepted() const { return accepted_; }
  std::size_t cap_rejections() const { return cap_rejections_; }
  double acceptance_rate() const {
    return steps_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(steps_);
  }

  // Recompute statistics from scratch after every accepted move and throw on mismatch.
  void set_verify(bool on) { verify_ = on; }

  // log alpha for moving dyad (i,j) to `proposed`; -inf when the diminution
  // value would exceed the cap, +inf when the current state is outside the cap
  // and the proposal returns inside it.
  double log_acceptance(std::size_t i, std::size_t j, Count proposed, const ParamVector& eta) {
    check_dyad(i, j);
    if (eta.plus.size() != g_plus_.size() || eta.minus.size() != g_minus_.size()) {
      throw SpecError("parameter vector does not match the model's statistic counts");
    }
    const Count cur = current_(i, j);
    if (proposed == cur) {
      std::fill(d_plus_.begin(), d_plus_.end(), 0.0);
      std::fill(d_minus_.begin(), d_minus_.end(), 0.0);
      return 0.0;
    }
    const Count p = prev()(i, j);
    const Count aug_old = std::max(p, cur);
    const Count aug_new = std::max(p, proposed);
    const Count dim_old = std::min(p, cur);
    const Count dim_new = std::min(p, proposed);
    if (dim_new > cap_) return -std::numeric_limits<double>::infinity();

    const auto& cfg = model_->proposal;
    double log_alpha =
        log_proposal_pmf(cur, static_cast<double>(proposed) + cfg.lambda_offset, cfg.pi0) -
        log_proposal_pmf(proposed, static_cast<double>(cur) + cfg.lambda_offset, cfg.pi0);

    if (aug_old != aug_new) {
      log_alpha += log_factorial(aug_old) - log_factorial(aug_new);
      model_->aug.change_into(pair_.aug, i, j, aug_old, aug_new, d_plus_);
      log_alpha += dot(eta.plus, d_plus_);
    } else {
      std::fill(d_plus_.begin(), d_plus_.end(), 0.0);
    }
    if (dim_old != dim_new) {
      model_->dim.change_into(pair_.dim, i, j, dim_old, dim_new, d_minus_);
      if (dim_old > cap_) return std::numeric_limits<double>::infinity();
      log_alpha += log_binomial(cap_, dim_new) - log_binomial(cap_, dim_old);
      log_alpha += dot(eta.minus, d_minus_);
    } else {
      std::fill(d_minus_.begin(), d_minus_.end(), 0.0);
    }
    return log_alpha;
  }

  // One MH transition at a uniformly chosen dyad. Returns whether it was accepted.
  bool step(const ParamVector& eta, Rng& rng) {
    auto [i, j] = pick_dyad(rng);
    const Count proposed = propose_value(current_(i, j), model_->proposal, rng);
    return try_move(i, j, proposed, eta, rng);
  }

  // Accept/reject a specific proposal, counting it as one step.
  bool try_move(std::size_t i, std::size_t j, Count proposed, const ParamVector& eta, Rng& rng) {
    ++steps_;
    const Count cur = current_(i, j);
    if (proposed == cur) {
      ++accepted_;
      return true;
    }
    const double log_alpha = log_acceptance(i, j, proposed, eta);
    if (log_alpha == -std::numeric_limits<double>::infinity() &&
        std::min(prev()(i, j), proposed) > cap_) {
      ++cap_rejections_;
      return false;
    }
    if (log_alpha < 0.0) {
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      if (!(unit(rng) < std::exp(log_alpha))) return false;
    }
    apply(i, j, proposed);
    ++accepted_;
    return true;
  }

  void run(std::size_t k, const ParamVector& eta, Rng& rng) {
    check_eta(eta);
    for (std::size_t s = 0; s < k; ++s) step(eta, rng);
  }

  // Largest absolute gap between the cache and a full recomputation.
  double cache_error() const {
    const auto a = model_->aug.evaluate(pair_.aug);
    const auto d = model_->dim.evaluate(pair_.dim);
    double worst = 0;
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - g_plus_[k]));
    for (std::size_t k = 0; k < d.size(); ++k) worst = std::max(worst, std::abs(d[k] - g_minus_[k]));
    return worst;
  }

 private:
  static double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
  }

  void check_dyad(std::size_t i, std::size_t j) const {
    if (i == j || i >= current_.size() || j >= current_.size()) {
      throw DataError("invalid dyad (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
  }

  void check_eta(const ParamVector& eta) const {
    if (eta.plus.size() != g_plus_.size() || eta.minus.size() != g_minus_.size()) {
      throw SpecError("parameter vector does not match the model's statistic counts");
    }
    if (!eta.finite()) throw SpecError("parameter vector has non-finite entries");
  }

  std::pair<std::size_t, std::size_t> pick_dyad(Rng& rng) const {
    const auto n = current_.size();
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    std::uniform_int_distribution<std::size_t> second(0, n - 2);
    std::size_t i = first(rng);
    std::size_t j = second(rng);
    if (j >= i) ++j;
    if (!current_.directed() && j < i) std::swap(i, j);
    return {i, j};
  }

  // Commit the move whose deltas log_acceptance() left in d_plus_/d_minus_.
  void apply(std::size_t i, std::size_t j, Count proposed) {
    const Count p = prev()(i, j);
    current_.set(i, j, proposed);
    pair_.aug.set(i, j, std::max(p, proposed));
    pair_.dim.set(i, j, std::min(p, proposed));
    for (std::size_t k = 0; k < g_plus_.size(); ++k) g_plus_[k] += d_plus_[k];
    for (std::size_t k = 0; k < g_minus_.size(); ++k) g_minus_[k] += d_minus_[k];
    if (verify_) {
      const double err = cache_error();
      if (err > 1e-9) {
        throw std::logic_error("statistic cache drifted by " + std::to_string(err) +
                               " after move at (" + std::to_string(i) + "," + std::to_string(j) +
                               ")");
      }
    }
  }

  const BoundModel* model_;
  Count cap_;
  ValuedNetwork current_;
  TransitionPair pair_;
  std::vector<double> g_plus_, g_minus_;
  std::vector<double> d_plus_, d_minus_;
  std::size_t steps_ = 0;
  std::size_t accepted_ = 0;
  std::size_t cap_rejections_ = 0;
  bool verify_ = false;
};

inline double log_acceptance(Chain& state, std::size_t i, std::size_t j, Count proposed,
                             const ParamVector& eta) {
  return state.log_acceptance(i, j, proposed, eta);
}

inline bool mh_step(Chain& state, const ParamVector& eta, Rng& rng) { return state.step(eta, rng); }

// Contrastive-divergence draw: K transitions starting at the observed network, no burn-in.
inline ValuedNetwork cd_sample(std::size_t k, const ParamVector& eta, const ValuedNetwork& prev,
                               const ValuedNetwork& obs, const BoundModel& model, Count cap,
                               Rng& rng) {
  if (k < 1) throw SpecError("CD sampling needs K >= 1");
  Chain chain(prev, obs, model, cap);
  chain.run(k, eta, rng);
  return chain.current();
}

// K transitions from an arbitrary start; the default start is all-ones off the diagonal.
inline ValuedNetwork simulate(std::size_t k, const ParamVector& eta, const ValuedNetwork& prev,
                              const ValuedNetwork& init, const BoundModel& model, Count cap,
                              Rng& rng) {
  if (k < 1) throw SpecError("simulation needs K >= 1");
  Chain chain(prev, init, model, cap);
  chain.run(k, eta, rng);
  return chain.current();
}

inline ValuedNetwork simulate(std::size_t k, const ParamVector& eta, const ValuedNetwork& prev,
                              const BoundModel& model, Count cap, Rng& rng) {
  return simulate(k, eta, prev, ValuedNetwork::filled(prev.size(), prev.orientation(), 1), model,
                  cap, rng);
}

// A synthetic series y^1..y^T. Each y^t (t >= 2) runs K transitions from an
// all-ones start conditional on y^{t-1}. y^1 is either generated the same way
// conditional on an empty network or, with first_from_empty=false, all ones.
inline NetworkSeries simulate_series(const ParamVector& eta, const BoundModel& model, std::size_t n,
                                     Orientation orientation, std::size_t T, Count cap, std::size_t k,
                                     Rng& rng, bool first_from_empty = true) {
  if (T < 1) throw SpecError("series length T must be at least 1");
  NetworkSeries series;
  for (std::size_t v = 0; v < n; ++v) series.nodes.push_back(std::to_string(v + 1));
  const auto ones = ValuedNetwork::filled(n, orientation, 1);
  if (first_from_empty) {
    const ValuedNetwork empty(n, orientation);
    series.networks.push_back(simulate(k, eta, empty, ones, model, cap, rng));
  } else {
    series.networks.push_back(ones);
  }
  for (std::size_t t = 2; t <= T; ++t) {
    series.networks.push_back(simulate(k, eta, series.networks.back(), ones, model, cap, rng));
  }
  return series;
}

}  // namespace pstergm
