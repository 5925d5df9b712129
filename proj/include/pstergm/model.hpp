#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pstergm/error.hpp"
#include "pstergm/network.hpp"
#include "pstergm/stats.hpp"

namespace pstergm {

// Coefficients for the augmentation block (eta+) and the diminution block (eta-).
struct ParamVector {
  std::vector<double> plus;
  std::vector<double> minus;

  static ParamVector zeros(std::size_t p_plus, std::size_t p_minus) {
    return {std::vector<double>(p_plus, 0.0), std::vector<double>(p_minus, 0.0)};
  }

  std::size_t size() const { return plus.size() + minus.size(); }

  bool finite() const {
    for (double v : plus) if (!std::isfinite(v)) return false;
    for (double v : minus) if (!std::isfinite(v)) return false;
    return true;
  }

  Eigen::VectorXd concat() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
    Eigen::Index k = 0;
    for (double v : plus) out[k++] = v;
    for (double v : minus) out[k++] = v;
    return out;
  }

  static ParamVector split(const Eigen::VectorXd& v, std::size_t p_plus) {
    if (static_cast<std::size_t>(v.size()) < p_plus) throw SpecError("parameter vector too short");
    ParamVector out;
    out.plus.assign(v.data(), v.data() + p_plus);
    out.minus.assign(v.data() + p_plus, v.data() + v.size());
    return out;
  }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

// Model specification: one statistic list per process plus the diminution cap.
struct ModelSpec {
  std::vector<StatisticSpec> aug_stats;
  std::vector<StatisticSpec> dim_stats;
  std::optional<Count> m;  // fixed cap; nullopt = per-interval m^t from the observed data
  double pi0 = 0.2;
  bool heterogeneous = false;

  std::size_t p_plus() const { return aug_stats.size(); }
  std::size_t p_minus() const { return dim_stats.size(); }

  void validate() const {
    if (aug_stats.empty()) throw SpecError("model needs at least one augmentation statistic");
    if (dim_stats.empty()) throw SpecError("model needs at least one diminution statistic");
    if (!(pi0 >= 0.0 && pi0 < 1.0)) throw SpecError("pi0 must lie in [0, 1)");
    if (m && *m < 0) throw SpecError("diminution cap m must be nonnegative");
  }

  // Cap for interval t (2 <= t <= T): the fixed m, or the largest observed diminution dyad.
  Count cap_for(const NetworkSeries& series, std::size_t t) const {
    return m ? *m : max_dim_value(series, t);
  }
};

}  // namespace pstergm
