#include <gtest/gtest.h>

#include "support.hpp"

using namespace pstergm;

namespace {

Covariates no_covs() { return {}; }

double tolerance(StatKind k) { return pst_test::integer_kind(k) ? 0.0 : 1e-12; }

}  // namespace

TEST(Statistics, EdgeSumOfEmptyNetworkIsZero) {
  const ValuedNetwork y(5, Orientation::directed);
  EXPECT_EQ(evaluate(StatisticSpec::of(StatKind::edge_sum), y, no_covs()), 0.0);
}

TEST(Statistics, MutualityOfPerfectSquares) {
  ValuedNetwork y(3, Orientation::directed);
  y.set(0, 1, 4);
  y.set(1, 0, 9);
  EXPECT_DOUBLE_EQ(evaluate(StatisticSpec::of(StatKind::mutuality), y, no_covs()), 6.0);
}

TEST(Statistics, MutualityNeedsDirectedNetwork) {
  const ValuedNetwork y(3, Orientation::undirected);
  EXPECT_THROW(evaluate(StatisticSpec::of(StatKind::mutuality), y, no_covs()), SpecError);
}

TEST(Statistics, TransitiveWeightTriangleMatchesTripleLoop) {
  ValuedNetwork y(3, Orientation::undirected);
  y.set(0, 1, 2);
  y.set(0, 2, 3);
  y.set(1, 2, 4);
  const auto spec = StatisticSpec::of(StatKind::transitive_weight);
  // (1,2): min(2, min(3,4)) = 2; (1,3): min(3, min(2,4)) = 2; (2,3): min(4, min(2,3)) = 2.
  EXPECT_EQ(evaluate(spec, y, no_covs()), 6.0);
  EXPECT_EQ(evaluate(spec, y, no_covs()), pst_test::oracle_statistic(spec, y, no_covs()));
}

TEST(Statistics, PropensityCountsPositiveDyads) {
  ValuedNetwork y(3, Orientation::undirected);
  y.set(0, 1, 5);
  EXPECT_EQ(evaluate(StatisticSpec::of(StatKind::propensity), y, no_covs()), 1.0);
}

TEST(Statistics, HomophilyAndHeterophilyAreValueWeighted) {
  ValuedNetwork y(4, Orientation::undirected);
  y.set(0, 1, 3);  // M-M
  y.set(0, 2, 5);  // M-F
  y.set(2, 3, 7);  // F-F
  Covariates c;
  c.nodal["sex"] = {"M", "M", "F", "F"};
  EXPECT_EQ(evaluate(StatisticSpec::homophily("sex", "M"), y, c), 3.0);
  EXPECT_EQ(evaluate(StatisticSpec::homophily("sex", "F"), y, c), 7.0);
  EXPECT_EQ(evaluate(StatisticSpec::heterophily("sex"), y, c), 5.0);
  EXPECT_EQ(evaluate(StatisticSpec::heterophily("sex", "F", "M"), y, c), 5.0);
}

TEST(Statistics, MissingAttributeContributesNothing) {
  ValuedNetwork y(3, Orientation::undirected);
  y.set(0, 1, 3);
  y.set(0, 2, 4);
  Covariates c;
  c.nodal["sex"] = {"M", "", "F"};
  EXPECT_EQ(evaluate(StatisticSpec::heterophily("sex"), y, c), 4.0);
}

TEST(Statistics, DyadicCovariateWeightsValues) {
  ValuedNetwork y(3, Orientation::undirected);
  y.set(0, 1, 3);
  y.set(1, 2, 4);
  Covariates c;
  c.dyadic["fb"] = {0, 1, 0, 1, 0, 0.5, 0, 0.5, 0};
  EXPECT_DOUBLE_EQ(evaluate(StatisticSpec::dyadic("fb"), y, c), 3.0 + 2.0);
}

TEST(Statistics, UnknownBindingsAreRejected) {
  const ValuedNetwork y(3, Orientation::undirected);
  EXPECT_THROW(evaluate(StatisticSpec::homophily("sex", "M"), y, no_covs()), SpecError);
  EXPECT_THROW(evaluate(StatisticSpec::dyadic("fb"), y, no_covs()), SpecError);
}

TEST(Statistics, EveryKindMatchesOracle) {
  std::mt19937_64 rng(17);
  for (auto o : {Orientation::directed, Orientation::undirected}) {
    for (int rep = 0; rep < 30; ++rep) {
      const auto y = pst_test::random_network(7, o, 9, rng);
      const auto c = pst_test::random_covariates(7, o, rng);
      for (const auto& s : pst_test::every_kind(o)) {
        EXPECT_NEAR(evaluate(s, y, c), pst_test::oracle_statistic(s, y, c), 1e-9) << s.label();
      }
    }
  }
}

TEST(StatisticVector, EmptyAndSingle) {
  const auto y = ValuedNetwork::filled(4, Orientation::directed, 2);
  EXPECT_TRUE(evaluate_vector({}, y, no_covs()).empty());
  const auto v = evaluate_vector({StatisticSpec::of(StatKind::edge_sum)}, y, no_covs());
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0], evaluate(StatisticSpec::of(StatKind::edge_sum), y, no_covs()));
}

TEST(StatisticVector, ContactModelEqualsIndependentEvaluations) {
  std::mt19937_64 rng(3);
  const auto y = pst_test::random_network(12, Orientation::undirected, 30, rng);
  Covariates c;
  c.nodal["gender"] = {"M", "F", "M", "M", "F", "M", "F", "M", "M", "F", "M", "M"};
  c.dyadic["facebook"] = pst_test::random_covariates(12, Orientation::undirected, rng).dyadic["tie"];
  const std::vector<StatisticSpec> six{parse_statistic("edge_sum"), parse_statistic("dispersion"),
                                       parse_statistic("homophily:gender=M"), parse_statistic("heterophily:gender"),
                                       parse_statistic("dyadic_cov:facebook"), parse_statistic("transitive_weight")};
  const auto v = evaluate_vector(six, y, c);
  ASSERT_EQ(v.size(), 6u);
  for (std::size_t k = 0; k < six.size(); ++k) EXPECT_EQ(v[k], evaluate(six[k], y, c));
}

TEST(ChangeStatistics, NoChangeIsZero) {
  std::mt19937_64 rng(8);
  const auto y = pst_test::random_network(6, Orientation::directed, 5, rng);
  const auto c = pst_test::random_covariates(6, Orientation::directed, rng);
  const auto d = change_statistics(pst_test::every_kind(Orientation::directed), y, 0, 1, y(0, 1), y(0, 1), c);
  for (double v : d) EXPECT_EQ(v, 0.0);
}

TEST(ChangeStatistics, EdgeSumIsLinear) {
  ValuedNetwork y(4, Orientation::undirected);
  y.set(1, 2, 2);
  const auto d = change_statistics({StatisticSpec::of(StatKind::edge_sum)}, y, 1, 2, 2, 5, no_covs());
  EXPECT_EQ(d[0], 3.0);
}

TEST(ChangeStatistics, RejectsSelfDyad) {
  const ValuedNetwork y(4, Orientation::undirected);
  EXPECT_THROW(change_statistics({StatisticSpec::of(StatKind::edge_sum)}, y, 2, 2, 0, 1, no_covs()), DataError);
}

TEST(ChangeStatistics, TransitiveWeightMatchesRecompute) {
  std::mt19937_64 rng(41);
  const auto spec = StatisticSpec::of(StatKind::transitive_weight);
  std::uniform_int_distribution<std::size_t> node(0, 7);
  std::uniform_int_distribution<Count> value(0, 8);
  for (int rep = 0; rep < 500; ++rep) {
    auto y = pst_test::random_network(8, Orientation::directed, 8, rng);
    std::size_t i = node(rng), j = node(rng);
    if (i == j) continue;
    const Count old_v = y(i, j), new_v = value(rng);
    const double before = pst_test::oracle_statistic(spec, y, no_covs());
    const double delta = change_statistics({spec}, y, i, j, old_v, new_v, no_covs())[0];
    y.set(i, j, new_v);
    ASSERT_EQ(delta, pst_test::oracle_statistic(spec, y, no_covs()) - before);
  }
}

// Incremental change equals full recomputation for every kind, both orientations.
TEST(ChangeStatistics, RandomPerturbationsMatchFullRecompute) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> size(3, 10);
  std::uniform_int_distribution<Count> value(0, 12);
  for (auto o : {Orientation::directed, Orientation::undirected}) {
    for (int rep = 0; rep < 1000; ++rep) {
      const auto n = size(rng);
      auto y = pst_test::random_network(n, o, 10, rng, 0.35);
      const auto c = pst_test::random_covariates(n, o, rng);
      std::uniform_int_distribution<std::size_t> node(0, n - 1);
      std::size_t i = node(rng), j = node(rng);
      while (j == i) j = node(rng);
      if (o == Orientation::undirected && j < i) std::swap(i, j);
      const Count old_v = y(i, j), new_v = value(rng);
      const auto specs = pst_test::every_kind(o);
      const auto before = evaluate_vector(specs, y, c);
      const auto delta = change_statistics(specs, y, i, j, old_v, new_v, c);
      y.set(i, j, new_v);
      const auto after = evaluate_vector(specs, y, c);
      for (std::size_t k = 0; k < specs.size(); ++k) {
        const double full = after[k] - before[k];
        if (pst_test::integer_kind(specs[k].kind)) {
          ASSERT_EQ(delta[k], full) << specs[k].label();
        } else {
          ASSERT_NEAR(delta[k], full, tolerance(specs[k].kind)) << specs[k].label();
        }
      }
    }
  }
}

TEST(StatisticSpecText, LabelsRoundTrip) {
  for (const auto& s : pst_test::every_kind(Orientation::directed)) {
    EXPECT_EQ(parse_statistic(s.label()), s) << s.label();
  }
  EXPECT_EQ(parse_statistic("homophily:gender=M").label(), "homophily:gender=M");
  EXPECT_THROW(parse_statistic("edges"), SpecError);
  EXPECT_THROW(parse_statistic("homophily:gender"), SpecError);
  EXPECT_THROW(parse_statistic("edge_sum:x"), SpecError);
  EXPECT_THROW(parse_statistic("dyadic_cov"), SpecError);
  EXPECT_THROW(parse_statistic("heterophily:gender=M"), SpecError);
}
