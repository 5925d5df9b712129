#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pstergm/error.hpp"
#include "pstergm/model.hpp"
#include "pstergm/network.hpp"
#include "pstergm/random.hpp"
#include "pstergm/sampler.hpp"

namespace pstergm {

// Sample mean and divide-by-s covariance of concatenated [g+, g-] vectors for one interval.
struct MomentEstimate {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  std::size_t sample_size = 0;
};

inline MomentEstimate moments_of(const std::vector<Eigen::VectorXd>& stats) {
  if (stats.size() < 2) throw SpecError("moment estimation needs at least two samples");
  const auto p = stats.front().size();
  const double s = static_cast<double>(stats.size());
  MomentEstimate out;
  out.sample_size = stats.size();
  out.mean = Eigen::VectorXd::Zero(p);
  for (const auto& g : stats) out.mean += g;
  out.mean /= s;
  out.covariance = Eigen::MatrixXd::Zero(p, p);
  for (const auto& g : stats) {
    const Eigen::VectorXd d = g - out.mean;
    out.covariance.noalias() += d * d.transpose();
  }
  out.covariance /= s;
  return out;
}

inline MomentEstimate moments(const std::vector<ValuedNetwork>& samples, const ValuedNetwork& prev,
                              const BoundModel& model) {
  std::vector<Eigen::VectorXd> stats;
  stats.reserve(samples.size());
  for (const auto& y : samples) stats.push_back(model.statistics(prev, y));
  return moments_of(stats);
}

// gamma * observed + (1 - gamma) * sampled, gamma in (0, 1].
inline Eigen::VectorXd pseudo_observation(double gamma, const Eigen::VectorXd& g_obs_sum,
                                          const Eigen::VectorXd& mu_sum) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw SpecError("step length must lie in (0, 1]");
  return gamma * g_obs_sum + (1.0 - gamma) * mu_sum;
}

// Solves A x = b by Cholesky. When A is numerically singular (reciprocal
// condition below 1e-12) it solves (A + ridge I) x = b instead, with
// ridge = 1e-8 * trace(A) / p doubled up to three times before giving up.
inline Eigen::VectorXd solve_regularized(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const auto p = a.rows();
  const double trace = a.trace();
  if (!std::isfinite(trace) || !(trace > 0.0)) {
    throw SingularMatrix("covariance of sampled statistics is zero or non-finite");
  }
  {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success && llt.rcond() > 1e-12) {
      Eigen::VectorXd x = llt.solve(b);
      if (x.allFinite()) return x;
    }
  }
  double ridge = 1e-8 * trace / static_cast<double>(p);
  for (int attempt = 0; attempt <= 3; ++attempt, ridge *= 2.0) {
    const Eigen::MatrixXd m = a + ridge * Eigen::MatrixXd::Identity(p, p);
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) continue;
    Eigen::VectorXd x = llt.solve(b);
    if (x.allFinite()) return x;
  }
  throw SingularMatrix("covariance of sampled statistics is singular; statistics may be collinear");
}

// Maximizer of the normality-approximated log-likelihood ratio:
// eta_prev + (sum Sigma_t)^{-1} (xi - sum mu_t).
inline Eigen::VectorXd partial_step(const Eigen::VectorXd& eta_prev, const Eigen::VectorXd& xi,
                                    const Eigen::VectorXd& mu_sum,
                                    const Eigen::MatrixXd& sigma_sum) {
  return eta_prev + solve_regularized(sigma_sum, xi - mu_sum);
}

inline double approx_llr(const Eigen::VectorXd& eta, const Eigen::VectorXd& eta0,
                         const Eigen::VectorXd& g_obs_sum, const Eigen::VectorXd& mu_sum,
                         const Eigen::MatrixXd& sigma_sum) {
  const Eigen::VectorXd d = eta - eta0;
  return d.dot(g_obs_sum - mu_sum) - 0.5 * d.dot(sigma_sum * d);
}

inline Eigen::VectorXd approx_llr_gradient(const Eigen::VectorXd& eta, const Eigen::VectorXd& eta0,
                                           const Eigen::VectorXd& g_obs_sum,
                                           const Eigen::VectorXd& mu_sum,
                                           const Eigen::MatrixXd& sigma_sum) {
  return (g_obs_sum - mu_sum) - sigma_sum * (eta - eta0);
}

// Monte Carlo score S = sum_t (g_obs_t - mu_t) and Hessian H = -sum_t Sigma_t.
struct ScoreHessian {
  Eigen::VectorXd score;
  Eigen::MatrixXd hessian;
};

inline ScoreHessian score_and_hessian(const std::vector<MomentEstimate>& per_interval,
                                      const Eigen::VectorXd& g_obs_sum) {
  const auto p = g_obs_sum.size();
  ScoreHessian out{g_obs_sum, Eigen::MatrixXd::Zero(p, p)};
  for (const auto& m : per_interval) {
    out.score -= m.mean;
    out.hessian -= m.covariance;
  }
  return out;
}

// eta - H^{-1} S, solved as eta + (-H)^{-1} S.
inline Eigen::VectorXd newton_update(const Eigen::VectorXd& eta, const ScoreHessian& sh) {
  return eta + solve_regularized(-sh.hessian, sh.score);
}

struct StageSchedule {
  std::size_t iterations = 20;
  std::size_t samples = 100;
  std::size_t cd_steps = 1;
};

struct FitSchedule {
  StageSchedule partial_stepping;
  std::vector<StageSchedule> newton{StageSchedule{5, 1000, 1}};
  std::size_t se_samples = 1000;
  std::size_t se_cd_steps = 1;
  bool standard_errors = true;
  std::optional<ParamVector> eta0;        // zeros when unset
  std::optional<double> score_tolerance;  // early Newton stop on ||S||_inf; off by default

  void validate() const {
    auto check = [](const StageSchedule& s, const char* what) {
      if (s.iterations < 1 || s.samples < 2 || s.cd_steps < 1) {
        throw SpecError(std::string(what) + " needs iterations >= 1, samples >= 2, cd_steps >= 1");
      }
    };
    check(partial_stepping, "partial stepping stage");
    for (const auto& s : newton) check(s, "Newton-Raphson stage");
    if (standard_errors && (se_samples < 2 || se_cd_steps < 1)) {
      throw SpecError("standard errors need se_samples >= 2 and se_cd_steps >= 1");
    }
  }

  // Time-heterogeneous contact-data schedule: CD_5n seeding, then CD_10n and CD_25n^2 refinement.
  static FitSchedule contact(std::size_t n) {
    FitSchedule s;
    s.partial_stepping = {20, 100, 5 * n};
    s.newton = {{20, 100, 10 * n}, {10, 1000, 25 * n * n}};
    s.se_samples = 1000;
    s.se_cd_steps = 20 * n * n;
    return s;
  }

  // Time-homogeneous forecasting schedule: CD_n seeding, then CD_2n and CD_50n^2 refinement.
  static FitSchedule forecasting(std::size_t n) {
    FitSchedule s;
    s.partial_stepping = {20, 100, n};
    s.newton = {{20, 100, 2 * n}, {10, 1000, 50 * n * n}};
    s.se_samples = 1000;
    s.se_cd_steps = 20 * n * n;
    return s;
  }

  // Parameter-recovery schedule: 20 partial steps (s=100) and 5 Newton steps (s=1000), all CD_n.
  static FitSchedule simulation(std::size_t n) {
    FitSchedule s;
    s.partial_stepping = {20, 100, n};
    s.newton = {{5, 1000, n}};
    s.se_samples = 1000;
    s.se_cd_steps = 20 * n * n;
    return s;
  }
};

struct TrajectoryPoint {
  int stage = 0;  // 1 = partial stepping, 2.. = Newton-Raphson phases
  std::size_t iteration = 0;
  std::vector<double> eta;
  double score_norm = 0;
};

struct EstimationError : Error {
  EstimationError(const std::string& what, std::vector<TrajectoryPoint> partial)
      : Error(what), trajectory(std::move(partial)) {}
  std::vector<TrajectoryPoint> trajectory;
};

// One transition y^{t-1} -> y^t with its observed statistics and diminution cap.
struct Interval {
  std::size_t t = 0;
  const ValuedNetwork* prev = nullptr;
  const ValuedNetwork* obs = nullptr;
  Count cap = 0;
  Eigen::VectorXd observed;
};

// The intervals t = first..last of a series bound to a model. Borrows the series.
class FitProblem {
 public:
  FitProblem(const NetworkSeries& series, const ModelSpec& spec, std::size_t first_t,
             std::size_t last_t)
      : model_(spec, series.covariates, series.node_count(), series.orientation()) {
    if (series.length() < 2) throw DataError("fitting needs a series with T >= 2");
    if (first_t < 2 || last_t > series.length() || first_t > last_t) {
      throw DataError("interval range " + std::to_string(first_t) + ".." + std::to_string(last_t) +
                      " outside 2.." + std::to_string(series.length()));
    }
    for (std::size_t t = first_t; t <= last_t; ++t) {
      Interval iv;
      iv.t = t;
      iv.prev = &series.at(t - 1);
      iv.obs = &series.at(t);
      iv.cap = spec.cap_for(series, t);
      if (max_dim_value(series, t) > iv.cap) {
        throw DataError("observed diminution value at t=" + std::to_string(t) +
                        " exceeds the cap m=" + std::to_string(iv.cap));
      }
      iv.observed = model_.statistics(*iv.prev, *iv.obs);
      if (!iv.observed.allFinite()) {
        throw DataError("non-finite observed statistics at t=" + std::to_string(t));
      }
      intervals_.push_back(std::move(iv));
    }
  }

  const BoundModel& model() const { return model_; }
  const std::vector<Interval>& intervals() const { return intervals_; }
  std::size_t p() const { return model_.p(); }

  Eigen::VectorXd observed_sum() const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p()));
    for (const auto& iv : intervals_) out += iv.observed;
    return out;
  }

 private:
  BoundModel model_;
  std::vector<Interval> intervals_;
};

// s independent K-step CD draws started at the observed network of one interval.
inline MomentEstimate sample_moments(const BoundModel& model, const Interval& iv,
                                     const ParamVector& eta, std::size_t samples, std::size_t k,
                                     Rng& rng) {
  const Chain start(*iv.prev, *iv.obs, model, iv.cap);
  std::vector<Eigen::VectorXd> stats;
  stats.reserve(samples);
  Chain chain = start;
  for (std::size_t r = 0; r < samples; ++r) {
    chain = start;
    chain.run(k, eta, rng);
    stats.push_back(chain.statistics());
  }
  return moments_of(stats);
}

// Moments for every interval at eta. Each interval draws from its own stream
// derived from `seed`, so results do not depend on the thread count.
inline std::vector<MomentEstimate> sample_all(const FitProblem& problem, const ParamVector& eta,
                                              std::size_t samples, std::size_t k,
                                              std::uint64_t seed, std::size_t threads) {
  const auto& ivs = problem.intervals();
  std::vector<MomentEstimate> out(ivs.size());
  parallel_for(ivs.size(), threads, [&](std::size_t idx) {
    Rng rng = derive_rng(seed, {ivs[idx].t});
    out[idx] = sample_moments(problem.model(), ivs[idx], eta, samples, k, rng);
  });
  return out;
}

namespace detail {

inline void require_finite(const Eigen::VectorXd& eta, const std::vector<TrajectoryPoint>& traj,
                           const char* stage) {
  if (!eta.allFinite()) {
    throw EstimationError(std::string(stage) + " produced non-finite parameters", traj);
  }
}

}  // namespace detail

// Partial stepping toward gamma_c-blended pseudo-observations, gamma_c = c/C.
inline ParamVector algorithm1_partial_stepping(const FitProblem& problem,
                                               const StageSchedule& stage, const ParamVector& eta0,
                                               Rng& rng, std::vector<TrajectoryPoint>* trajectory = nullptr,
                                               std::size_t threads = 1) {
  std::vector<TrajectoryPoint> local;
  auto& traj = trajectory ? *trajectory : local;
  const auto p_plus = problem.model().p_plus();
  const Eigen::VectorXd g_obs = problem.observed_sum();
  Eigen::VectorXd eta = eta0.concat();
  for (std::size_t c = 1; c <= stage.iterations; ++c) {
    const auto per = sample_all(problem, ParamVector::split(eta, p_plus), stage.samples,
                                stage.cd_steps, rng(), threads);
    Eigen::VectorXd mu_sum = Eigen::VectorXd::Zero(eta.size());
    Eigen::MatrixXd sigma_sum = Eigen::MatrixXd::Zero(eta.size(), eta.size());
    for (const auto& m : per) {
      mu_sum += m.mean;
      sigma_sum += m.covariance;
    }
    const double gamma = static_cast<double>(c) / static_cast<double>(stage.iterations);
    const Eigen::VectorXd xi = pseudo_observation(gamma, g_obs, mu_sum);
    try {
      eta = partial_step(eta, xi, mu_sum, sigma_sum);
    } catch (const SingularMatrix& e) {
      throw EstimationError(std::string("partial stepping: ") + e.what(), traj);
    }
    traj.push_back({1, c, std::vector<double>(eta.data(), eta.data() + eta.size()),
                    (g_obs - mu_sum).norm()});
    detail::require_finite(eta, traj, "partial stepping");
  }
  return ParamVector::split(eta, p_plus);
}

// Newton-Raphson on the Monte Carlo log-likelihood. Aborts when the score norm
// grows tenfold beyond the smallest norm seen so far.
inline ParamVector algorithm2_newton_raphson(const FitProblem& problem, const StageSchedule& stage,
                                             const ParamVector& eta_init, Rng& rng,
                                             std::vector<TrajectoryPoint>* trajectory = nullptr,
                                             std::size_t threads = 1, int stage_id = 2,
                                             std::optional<double> score_tolerance = {}) {
  std::vector<TrajectoryPoint> local;
  auto& traj = trajectory ? *trajectory : local;
  const auto p_plus = problem.model().p_plus();
  const Eigen::VectorXd g_obs = problem.observed_sum();
  Eigen::VectorXd eta = eta_init.concat();
  double best_norm = std::numeric_limits<double>::infinity();
  for (std::size_t c = 1; c <= stage.iterations; ++c) {
    const auto per = sample_all(problem, ParamVector::split(eta, p_plus), stage.samples,
                                stage.cd_steps, rng(), threads);
    const auto sh = score_and_hessian(per, g_obs);
    const double norm = sh.score.norm();
    if (norm > 10.0 * best_norm) {
      throw EstimationError("Newton-Raphson diverged: score norm " + std::to_string(norm) +
                                " exceeds 10x its minimum " + std::to_string(best_norm),
                            traj);
    }
    best_norm = std::min(best_norm, norm);
    if (score_tolerance && sh.score.lpNorm<Eigen::Infinity>() < *score_tolerance) {
      traj.push_back({stage_id, c, std::vector<double>(eta.data(), eta.data() + eta.size()), norm});
      break;
    }
    try {
      eta = newton_update(eta, sh);
    } catch (const SingularMatrix& e) {
      throw EstimationError(std::string("Newton-Raphson: ") + e.what(), traj);
    }
    traj.push_back({stage_id, c, std::vector<double>(eta.data(), eta.data() + eta.size()), norm});
    detail::require_finite(eta, traj, "Newton-Raphson");
  }
  return ParamVector::split(eta, p_plus);
}

struct StandardErrors {
  std::vector<double> se;
  Eigen::MatrixXd fisher;
  bool positive_definite = false;
};

// se = sqrt(diag(I^{-1})). A Fisher matrix whose smallest eigenvalue is below
// 1e-10 of its largest is flagged and yields NaN standard errors.
inline StandardErrors standard_errors_from_fisher(const Eigen::MatrixXd& fisher) {
  StandardErrors out;
  out.fisher = fisher;
  const auto p = fisher.rows();
  out.se.assign(static_cast<std::size_t>(p), std::numeric_limits<double>::quiet_NaN());
  if (p == 0 || !fisher.allFinite()) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fisher);
  const double hi = eig.eigenvalues().maxCoeff();
  const double lo = eig.eigenvalues().minCoeff();
  if (!(hi > 0.0) || !(lo > 1e-10 * hi)) return out;
  Eigen::LLT<Eigen::MatrixXd> llt(fisher);
  if (llt.info() != Eigen::Success) return out;
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(p, p));
  for (Eigen::Index k = 0; k < p; ++k) out.se[static_cast<std::size_t>(k)] = std::sqrt(inv(k, k));
  out.positive_definite = true;
  return out;
}

// Fisher information sum_t Sigma_t at eta from fresh draws started at each observed y^t.
inline StandardErrors standard_errors(const FitProblem& problem, const ParamVector& eta,
                                      std::size_t n_samples, std::size_t cd_steps, Rng& rng,
                                      std::size_t threads = 1) {
  const auto per = sample_all(problem, eta, n_samples, cd_steps, rng(), threads);
  Eigen::MatrixXd fisher = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(problem.p()),
                                                 static_cast<Eigen::Index>(problem.p()));
  for (const auto& m : per) fisher += m.covariance;
  return standard_errors_from_fisher(fisher);
}

// One parameter block: the whole series (homogeneous) or a single interval (heterogeneous).
struct BlockFit {
  std::size_t first_t = 0;
  std::size_t last_t = 0;
  std::vector<Count> caps;  // m per interval in the block
  ParamVector eta;
  std::vector<double> std_errors;
  Eigen::MatrixXd fisher;
  bool fisher_positive_definite = false;
  std::vector<TrajectoryPoint> trajectory;
};

struct FitResult {
  bool heterogeneous = false;
  std::vector<std::string> aug_labels;
  std::vector<std::string> dim_labels;
  std::vector<BlockFit> blocks;
  FitSchedule schedule;
  std::uint64_t seed = 0;
};

inline BlockFit fit_block(const FitProblem& problem, const FitSchedule& schedule, Rng& rng,
                          std::size_t threads) {
  BlockFit block;
  block.first_t = problem.intervals().front().t;
  block.last_t = problem.intervals().back().t;
  for (const auto& iv : problem.intervals()) block.caps.push_back(iv.cap);
  const auto& model = problem.model();
  ParamVector eta = schedule.eta0 ? *schedule.eta0 : ParamVector::zeros(model.p_plus(), model.p_minus());
  if (eta.plus.size() != model.p_plus() || eta.minus.size() != model.p_minus()) {
    throw SpecError("initial parameters do not match the model's statistic counts");
  }
  eta = algorithm1_partial_stepping(problem, schedule.partial_stepping, eta, rng,
                                    &block.trajectory, threads);
  int stage_id = 2;
  for (const auto& phase : schedule.newton) {
    eta = algorithm2_newton_raphson(problem, phase, eta, rng, &block.trajectory, threads,
                                    stage_id++, schedule.score_tolerance);
  }
  block.eta = eta;
  if (schedule.standard_errors) {
    auto se = standard_errors(problem, eta, schedule.se_samples, schedule.se_cd_steps, rng, threads);
    block.std_errors = std::move(se.se);
    block.fisher = std::move(se.fisher);
    block.fisher_positive_definite = se.positive_definite;
  }
  return block;
}

// Partial stepping then Newton-Raphson refinement, then standard errors.
// Heterogeneous specs fit every interval independently with its own stream.
inline FitResult fit(const NetworkSeries& series, const ModelSpec& spec,
                     const FitSchedule& schedule, std::uint64_t seed, std::size_t threads = 1) {
  spec.validate();
  schedule.validate();
  if (series.length() < 2) throw DataError("fitting needs a series with T >= 2");
  FitResult result;
  result.heterogeneous = spec.heterogeneous;
  result.schedule = schedule;
  result.seed = seed;
  for (const auto& s : spec.aug_stats) result.aug_labels.push_back(s.label());
  for (const auto& s : spec.dim_stats) result.dim_labels.push_back(s.label());
  if (spec.heterogeneous) {
    result.blocks.resize(series.length() - 1);
    parallel_for(series.length() - 1, threads, [&](std::size_t idx) {
      const std::size_t t = idx + 2;
      const FitProblem problem(series, spec, t, t);
      Rng rng = derive_rng(seed, {t});
      result.blocks[idx] = fit_block(problem, schedule, rng, 1);
    });
  } else {
    const FitProblem problem(series, spec, 2, series.length());
    Rng rng(seed);
    result.blocks.push_back(fit_block(problem, schedule, rng, threads));
  }
  return result;
}

}  // namespace pstergm
