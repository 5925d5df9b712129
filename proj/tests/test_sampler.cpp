#include <gtest/gtest.h>

#include <map>

#include "support.hpp"

using namespace pstergm;

namespace {

BoundModel edge_model(Orientation o = Orientation::directed) {
  ModelSpec spec;
  spec.aug_stats = {StatisticSpec::of(StatKind::edge_sum)};
  spec.dim_stats = {StatisticSpec::of(StatKind::edge_sum)};
  return BoundModel(spec, {}, 2, o);
}

// Unnormalized weight of one dyad value y given prev p: h+ h- exp(eta+ y+ + eta- y-).
double dyad_weight(Count p, Count y, double eta_plus, double eta_minus, Count m) {
  const Count a = std::max(p, y), d = std::min(p, y);
  if (d > m) return 0.0;
  return std::exp(-std::lgamma(a + 1.0) + std::lgamma(m + 1.0) - std::lgamma(d + 1.0) - std::lgamma(m - d + 1.0) +
                  eta_plus * a + eta_minus * d);
}

std::vector<double> dyad_distribution(Count p, double eta_plus, double eta_minus, Count m, Count max_value) {
  std::vector<double> w(static_cast<std::size_t>(max_value) + 1);
  double total = 0;
  for (Count y = 0; y <= max_value; ++y) total += w[static_cast<std::size_t>(y)] = dyad_weight(p, y, eta_plus, eta_minus, m);
  for (auto& v : w) v /= total;
  return w;
}

std::size_t differing_dyads(const ValuedNetwork& a, const ValuedNetwork& b) {
  std::size_t n = 0;
  a.for_each_dyad([&](std::size_t i, std::size_t j, Count v) { n += v != b(i, j); });
  return n;
}

}  // namespace

TEST(Proposal, ZeroMassWithDefaults) {
  EXPECT_NEAR(proposal_pmf(0, 0.5, 0.2), 0.2 + 0.8 * std::exp(-0.5), 1e-15);
}

TEST(Proposal, NoInflationIsPoisson) {
  for (double lambda : {0.5, 3.5, 12.5}) {
    for (Count v = 0; v < 30; ++v) {
      const double poisson = std::exp(-lambda + v * std::log(lambda) - std::lgamma(v + 1.0));
      EXPECT_NEAR(proposal_pmf(v, lambda, 0.0), poisson, 1e-13 * std::max(1.0, poisson));
    }
  }
}

TEST(Proposal, PartialSumsReachOne) {
  for (double lambda : {0.5, 1.5, 10.5, 200.5}) {
    for (double pi0 : {0.0, 0.2, 0.9}) {
      const auto last = static_cast<Count>(lambda + 40 * std::sqrt(lambda) + 40);
      double sum = 0;
      for (Count v = 0; v <= last; ++v) sum += proposal_pmf(v, lambda, pi0);
      EXPECT_NEAR(sum, 1.0, 1e-9) << "lambda=" << lambda << " pi0=" << pi0;
    }
  }
}

TEST(Proposal, NegativeValueAndBadRate) {
  EXPECT_EQ(proposal_pmf(-1, 1.5, 0.2), 0.0);
  EXPECT_THROW(proposal_pmf(0, 0.0, 0.2), std::domain_error);
}

TEST(Proposal, EmpiricalZeroFrequency) {
  Rng rng(1);
  const ProposalConfig cfg;
  const int draws = 100000;
  int zeros = 0;
  for (int k = 0; k < draws; ++k) zeros += propose_value(0, cfg, rng) == 0;
  const double p = 0.2 + 0.8 * std::exp(-0.5);
  const double se = std::sqrt(p * (1 - p) / draws);
  EXPECT_NEAR(zeros / static_cast<double>(draws), p, 3 * se);
}

TEST(Proposal, HeavyInflationGivesZeros) {
  Rng rng(2);
  const ProposalConfig cfg{0.999, 0.5};
  int zeros = 0;
  for (int k = 0; k < 10000; ++k) zeros += propose_value(6, cfg, rng) == 0;
  EXPECT_GE(zeros, 9950);
}

TEST(Proposal, HistogramPassesChiSquare) {
  Rng rng(3);
  for (Count current : {0, 4, 25}) {
    const ProposalConfig cfg;
    const double lambda = current + 0.5;
    const std::size_t cells = static_cast<std::size_t>(lambda + 40 * std::sqrt(lambda) + 40);
    std::vector<double> counts(cells + 1, 0.0), probs(cells + 1, 0.0);
    const int draws = 100000;
    for (int k = 0; k < draws; ++k) {
      const auto v = static_cast<std::size_t>(propose_value(current, cfg, rng));
      counts[std::min(v, cells)] += 1;
    }
    for (std::size_t v = 0; v <= cells; ++v) probs[v] = proposal_pmf(static_cast<Count>(v), lambda, cfg.pi0);
    EXPECT_GT(pst_test::chi_square_p(counts, probs, draws), 0.01) << "current=" << current;
  }
}

TEST(Acceptance, NoOpProposalHasZeroLogRatio) {
  const auto model = edge_model();
  const auto prev = ValuedNetwork::filled(2, Orientation::directed, 2);
  Chain chain(prev, prev, model, 5);
  EXPECT_EQ(chain.log_acceptance(0, 1, 2, ParamVector{{0.7}, {-0.3}}), 0.0);
}

TEST(Acceptance, NullModelIsProposalTimesReference) {
  const auto model = edge_model();
  ValuedNetwork prev(2, Orientation::directed);
  prev.set(0, 1, 2);
  Chain chain(prev, prev, model, 4);
  const ParamVector zero{{0.0}, {0.0}};
  for (Count proposed : {0, 1, 3, 7}) {
    const double expected = pst_test::oracle_log_q(proposed, 2, 0.2) - pst_test::oracle_log_q(2, proposed, 0.2) +
                            std::lgamma(3.0) - std::lgamma(std::max<Count>(2, proposed) + 1.0) +
                            std::log(std::tgamma(5.0) / std::tgamma(std::min<Count>(2, proposed) + 1.0) /
                                     std::tgamma(4.0 - std::min<Count>(2, proposed) + 1.0)) -
                            std::log(6.0);
    EXPECT_NEAR(chain.log_acceptance(0, 1, proposed, zero), expected, 1e-12) << proposed;
  }
}

// exp(log alpha) equals the ratio of unnormalized targets times the proposal
// ratio, with the target computed from scratch.
TEST(Acceptance, MatchesFromScratchDensity) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::uniform_int_distribution<Count> value(0, 7);
  for (auto o : {Orientation::directed, Orientation::undirected}) {
    const auto specs = pst_test::every_kind(o);
    for (int rep = 0; rep < 300; ++rep) {
      const std::size_t n = 2 + rep % 3;
      const auto c = pst_test::random_covariates(n, o, rng);
      ModelSpec spec;
      spec.aug_stats = specs;
      spec.dim_stats = specs;
      const BoundModel model(spec, c, n, o);
      const auto prev = pst_test::random_network(n, o, 6, rng);
      const auto cur = pst_test::random_network(n, o, 6, rng);
      const Count cap = 6;
      ParamVector eta = ParamVector::zeros(specs.size(), specs.size());
      for (auto& v : eta.plus) v = coef(rng);
      for (auto& v : eta.minus) v = coef(rng);
      Chain chain(prev, cur, model, cap);
      std::uniform_int_distribution<std::size_t> node(0, n - 1);
      std::size_t i = node(rng), j = node(rng);
      while (j == i) j = node(rng);
      if (o == Orientation::undirected && j < i) std::swap(i, j);
      const Count proposed = value(rng);
      auto next = cur;
      next.set(i, j, proposed);
      const double before = pst_test::oracle_log_density(specs, specs, eta, prev, cur, c, cap);
      const double after = pst_test::oracle_log_density(specs, specs, eta, prev, next, c, cap);
      const double expected = after - before + pst_test::oracle_log_q(proposed, cur(i, j), 0.2) -
                              pst_test::oracle_log_q(cur(i, j), proposed, 0.2);
      const double got = chain.log_acceptance(i, j, proposed, eta);
      if (proposed == cur(i, j)) {
        EXPECT_EQ(got, 0.0);
      } else if (std::isinf(after)) {
        EXPECT_EQ(got, -INFINITY);
      } else {
        EXPECT_NEAR(got, expected, 1e-9 * std::max(1.0, std::fabs(expected)));
      }
    }
  }
}

TEST(Acceptance, CapBoundaries) {
  const auto model = edge_model();
  ValuedNetwork prev(2, Orientation::directed);
  prev.set(0, 1, 5);
  const ParamVector eta{{0.0}, {0.0}};
  Chain inside(prev, ValuedNetwork(2, Orientation::directed), model, 2);
  EXPECT_EQ(inside.log_acceptance(0, 1, 4, eta), -INFINITY);  // dim would be 4 > 2
  Chain outside(prev, prev, model, 2);                         // current dim 5 > 2
  EXPECT_EQ(outside.log_acceptance(0, 1, 1, eta), INFINITY);
  Rng rng(4);
  EXPECT_TRUE(outside.try_move(0, 1, 1, eta, rng));
  EXPECT_EQ(outside.current()(0, 1), 1);
  EXPECT_LT(outside.cache_error(), 1e-12);
}

TEST(Chain, ForcedNoOpIsAcceptedAndLeavesState) {
  const auto model = edge_model();
  const auto y = ValuedNetwork::filled(2, Orientation::directed, 3);
  Chain chain(y, y, model, 5);
  Rng rng(5);
  EXPECT_TRUE(chain.try_move(1, 0, 3, ParamVector{{1.0}, {1.0}}, rng));
  EXPECT_EQ(chain.current(), y);
  EXPECT_EQ(chain.steps(), 1u);
  EXPECT_EQ(chain.accepted(), 1u);
}

TEST(Chain, CacheStaysExactAndRatesAreProbabilities) {
  std::mt19937_64 gen(6);
  for (auto o : {Orientation::directed, Orientation::undirected}) {
    const auto specs = pst_test::every_kind(o);
    const auto c = pst_test::random_covariates(6, o, gen);
    ModelSpec spec;
    spec.aug_stats = specs;
    spec.dim_stats = specs;
    const BoundModel model(spec, c, 6, o);
    const auto prev = pst_test::random_network(6, o, 4, gen);
    Chain chain(prev, prev, model, 4);
    chain.set_verify(true);
    ParamVector eta = ParamVector::zeros(specs.size(), specs.size());
    eta.plus[0] = -0.2;
    Rng rng(7);
    EXPECT_NO_THROW(chain.run(5000, eta, rng));
    EXPECT_GT(chain.accepted(), 0u);
    EXPECT_GE(chain.acceptance_rate(), 0.0);
    EXPECT_LE(chain.acceptance_rate(), 1.0);
    EXPECT_EQ(chain.steps(), 5000u);
    EXPECT_LT(chain.cache_error(), 1e-9);
  }
}

TEST(Chain, RejectsMismatchedParameters) {
  const auto model = edge_model();
  const auto y = ValuedNetwork::filled(2, Orientation::directed, 1);
  Chain chain(y, y, model, 2);
  Rng rng(1);
  EXPECT_THROW(chain.run(1, ParamVector{{0.0, 0.0}, {0.0}}, rng), SpecError);
  EXPECT_THROW(chain.run(1, ParamVector{{NAN}, {0.0}}, rng), SpecError);
}

TEST(CdSample, StepCountBoundsTheChange) {
  std::mt19937_64 gen(8);
  ModelSpec spec;
  spec.aug_stats = {StatisticSpec::of(StatKind::edge_sum), StatisticSpec::of(StatKind::transitive_weight)};
  spec.dim_stats = spec.aug_stats;
  const BoundModel model(spec, {}, 8, Orientation::undirected);
  const auto prev = pst_test::random_network(8, Orientation::undirected, 5, gen);
  const auto obs = pst_test::random_network(8, Orientation::undirected, 5, gen);
  const ParamVector eta{{-0.5, 0.2}, {0.3, 0.1}};
  Rng rng(9);
  EXPECT_THROW(cd_sample(0, eta, prev, obs, model, 5, rng), SpecError);
  for (std::size_t k : {1u, 3u, 10u}) {
    for (int rep = 0; rep < 50; ++rep) {
      EXPECT_LE(differing_dyads(cd_sample(k, eta, prev, obs, model, 5, rng), obs), k);
    }
  }
}

TEST(Simulate, SameSeedSameNetwork) {
  const auto model = edge_model();
  const auto prev = ValuedNetwork::filled(2, Orientation::directed, 1);
  const ParamVector eta{{-0.5}, {0.5}};
  Rng a(42), b(42);
  EXPECT_EQ(simulate(500, eta, prev, model, 3, a), simulate(500, eta, prev, model, 3, b));
}

// Null model on two nodes: the chain's dyad values follow the reference product.
TEST(Simulate, NullModelMatchesReferenceDistribution) {
  const auto model = edge_model();
  ValuedNetwork prev(2, Orientation::directed);
  prev.set(0, 1, 1);
  const ParamVector eta{{0.0}, {0.0}};
  Chain chain(prev, prev, model, 1);
  Rng rng(10);
  std::map<Count, double> counts;
  const int samples = 200000;
  for (int s = 0; s < samples; ++s) {
    chain.run(3, eta, rng);
    counts[chain.current()(0, 1)] += 1;
  }
  const auto target = dyad_distribution(1, 0.0, 0.0, 1, 12);
  double tv = 0;
  for (Count v = 0; v <= 12; ++v) tv += std::fabs(counts[v] / samples - target[static_cast<std::size_t>(v)]);
  EXPECT_LT(tv / 2, 0.02);
}

// Short CD chains from the observed network approach the long-run law as K grows.
TEST(CdSample, LargeKApproachesLongChain) {
  const auto model = edge_model();
  ValuedNetwork prev(2, Orientation::directed);
  prev.set(0, 1, 2);
  prev.set(1, 0, 1);
  const auto obs = ValuedNetwork::filled(2, Orientation::directed, 6);
  const ParamVector eta{{-0.5}, {0.4}};
  Rng rng(11);
  std::map<Count, double> counts;
  const int samples = 20000;
  for (int s = 0; s < samples; ++s) counts[cd_sample(200, eta, prev, obs, model, 2, rng)(0, 1)] += 1;
  const auto target = dyad_distribution(2, -0.5, 0.4, 2, 15);
  double tv = 0;
  for (Count v = 0; v <= 15; ++v) tv += std::fabs(counts[v] / samples - target[static_cast<std::size_t>(v)]);
  EXPECT_LT(tv / 2, 0.03);
}

TEST(Simulate, SeriesGeneratorIsDeterministic) {
  ModelSpec spec;
  spec.aug_stats = {StatisticSpec::of(StatKind::edge_sum), StatisticSpec::of(StatKind::mutuality)};
  spec.dim_stats = spec.aug_stats;
  const BoundModel model(spec, {}, 6, Orientation::directed);
  const ParamVector eta{{-1, 0.5}, {-0.5, 0.5}};
  Rng a(3), b(3);
  const auto s1 = simulate_series(eta, model, 6, Orientation::directed, 4, 3, 200, a);
  const auto s2 = simulate_series(eta, model, 6, Orientation::directed, 4, 3, 200, b);
  ASSERT_EQ(s1.length(), 4u);
  for (std::size_t t = 1; t <= 4; ++t) EXPECT_EQ(s1.at(t), s2.at(t));
  EXPECT_TRUE(validate_series(s1).empty());
  for (std::size_t t = 2; t <= 4; ++t) EXPECT_LE(max_dim_value(s1, t), 3);
}
