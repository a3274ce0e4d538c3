#include "ceri/budget.hpp"
#include "ceri/core.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

namespace ceri {
namespace {

using testing::make_economy;

TEST(ValidateEconomy, MinimalEconomyIsValid) {
  const Economy e = make_economy("a", {1}, {{"a"}});
  EXPECT_TRUE(validate_economy(e).empty());
  EXPECT_EQ(e.delta(), 1);
}

TEST(ValidateEconomy, DuplicateBundleIsReportedOnce) {
  const Economy e = make_economy("ab", {1, 1}, {{"a", "b", "a"}});
  const auto v = validate_economy(e);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, "duplicate bundle");
}

TEST(ValidateEconomy, LargeBundleEconomy) {
  const Economy e = testing::large_bundle_economy();
  EXPECT_TRUE(validate_economy(e).empty());
  EXPECT_EQ(e.delta(), 100);
}

TEST(ValidateEconomy, FlagsNonpositiveCapacityAndEmptyAgents) {
  Economy e = make_economy("a", {0}, {});
  const auto v = validate_economy(e);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].kind, "no agents");
  EXPECT_EQ(v[1].kind, "nonpositive capacity");
  EXPECT_THROW(require_valid(e), Error);
}

TEST(ValidateEconomy, FlagsOversizeAndEmptyBundles) {
  Economy e = make_economy("ab", {1, 1}, {{"ab", ""}});
  e.max_bundle_size = 1;
  const auto v = validate_economy(e);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].kind, "oversize bundle");
  EXPECT_EQ(v[1].kind, "empty bundle listed");
}

TEST(ValidateEconomy, DeltaIsZeroWithoutBundles) {
  const Economy e = make_economy("a", {1}, {{}, {}});
  EXPECT_EQ(e.delta(), 0);
}

TEST(Preference, RankOfAndEmptyIndex) {
  const AgentPreference p = testing::ranking("abc", {"ab", "c"});
  EXPECT_EQ(p.rank_of(testing::bundle_of("abc", "ab")), 0);
  EXPECT_EQ(p.rank_of(testing::bundle_of("abc", "c")), 1);
  EXPECT_EQ(p.rank_of(testing::bundle_of("abc", "")), p.empty_index());
  EXPECT_FALSE(p.rank_of(testing::bundle_of("abc", "a")).has_value());
  EXPECT_TRUE(same_bundle(p.bundle_at(p.empty_index(), 3), Bundle::Zero(3)));
}

TEST(Budget, UniformMidpoint) { EXPECT_DOUBLE_EQ(BudgetDistribution::uniform(1, 2).cdf(1.5), 0.5); }

TEST(Budget, TwoPointCdfIsRightContinuous) {
  const BudgetDistribution b = testing::two_agents_budget();
  EXPECT_DOUBLE_EQ(b.cdf(1.0), 0.5);
  EXPECT_DOUBLE_EQ(b.cdf_below(1.0), 0.0);
  EXPECT_DOUBLE_EQ(b.cdf(1.999), 0.5);
  EXPECT_DOUBLE_EQ(b.cdf(2.0), 1.0);
  EXPECT_FALSE(b.is_continuous());
}

TEST(Budget, MixtureReachesOneAtTopOfSupport) {
  const BudgetDistribution b({{0.5, UniformInterval{0, 1}}, {0.5, PointMass{1}}});
  EXPECT_DOUBLE_EQ(b.cdf(1.0), 1.0);
  EXPECT_DOUBLE_EQ(b.cdf_below(1.0), 0.5);
}

TEST(Budget, RejectsBadWeightsAndSupports) {
  EXPECT_THROW(BudgetDistribution({{0.5, PointMass{1}}}), Error);
  EXPECT_THROW(BudgetDistribution({{1.0, PointMass{-1}}}), Error);
  EXPECT_THROW(BudgetDistribution({{1.0, UniformInterval{2, 1}}}), Error);
}

TEST(Budget, RestrictedAndScaled) {
  const BudgetDistribution u = BudgetDistribution::uniform(0, 2);
  EXPECT_EQ(u.restricted(1, 2), BudgetDistribution::uniform(1, 2));
  EXPECT_EQ(u.scaled(3), BudgetDistribution::uniform(0, 6));
  EXPECT_THROW(BudgetDistribution::point(1).restricted(2, 3), Error);
}

TEST(BudgetProperty, CdfIsAMonotoneDistributionFunction) {
  Rng rng(101);
  for (int trial = 0; trial < 500; ++trial) {
    const BudgetDistribution b = testing::random_budget(rng);
    EXPECT_DOUBLE_EQ(b.cdf(-1.0), 0.0);
    EXPECT_NEAR(b.cdf(b.max_support()), 1.0, 1e-12);
    double last = 0.0;
    for (double t = -0.5; t <= 6.0; t += 0.01) {
      const double f = b.cdf(t);
      ASSERT_GE(f, last - 1e-15);
      ASSERT_LE(b.cdf_below(t), f + 1e-15);
      last = f;
    }
  }
}

TEST(BudgetProperty, SamplesFollowTheCdf) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const BudgetDistribution b = testing::random_budget(rng);
    Rng draws(trial);
    const int n = 20000;
    std::vector<double> xs(n);
    for (auto& x : xs) x = b.sample(draws);
    for (double t : {0.5, 1.0, 2.0, 3.0}) {
      const double empirical = std::count_if(xs.begin(), xs.end(), [&](double x) { return x <= t; }) / double(n);
      EXPECT_NEAR(empirical, b.cdf(t), 0.02);
    }
  }
}

TEST(EconomyProperty, DeltaMatchesBruteForce) {
  Rng rng(3);
  testing::EconomyShape shape;
  shape.multi_unit = true;
  for (int trial = 0; trial < 300; ++trial) {
    const Economy e = testing::random_economy(rng, shape);
    int brute = 0;
    for (const auto& a : e.agents) {
      for (const auto& x : a.ranked) brute = std::max(brute, static_cast<int>(x.sum()));
    }
    EXPECT_EQ(e.delta(), brute);
    EXPECT_TRUE(validate_economy(e).empty());
  }
}

TEST(Allocation, DegenerateAndAggregate) {
  const Economy e = testing::complements_economy();
  const LotteryAllocation l = degenerate_allocation(e, {1, 1});
  EXPECT_TRUE(validate_allocation(e, l).empty());
  EXPECT_EQ(aggregate(e, {1, 1}), Eigen::Vector2i(1, 1));
  EXPECT_TRUE(aggregate_expected(e, l).isApprox(Eigen::Vector2d(1, 1)));
  EXPECT_EQ(format_bundle(e, testing::bundle_of("ab", "ab")), "{a,b}");
}

TEST(Allocation, ValidationCatchesBadMass) {
  const Economy e = testing::two_agents_economy();
  LotteryAllocation l = degenerate_allocation(e, {0, 1});
  l[0][0] = 0.7;
  EXPECT_FALSE(validate_allocation(e, l).empty());
}

}  // namespace
}  // namespace ceri
