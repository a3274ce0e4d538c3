#include "ceri/decompose.hpp"
#include "ceri/mechanisms.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <map>

namespace ceri {
namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& err) {
    return err.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidInput;
}

/// Largest per-good overshoot of capacity across atoms.
int worst_slack(const Economy& e, const Decomposition& d) {
  int worst = 0;
  for (const auto& atom : d) worst = std::max(worst, (aggregate(e, atom.allocation) - e.capacities).maxCoeff());
  return worst;
}

double marginal_gap(const Economy& e, const LotteryAllocation& a, const Decomposition& d) {
  const LotteryAllocation m = marginals(e, d);
  double gap = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) gap = std::max(gap, (a[i] - m[i]).cwiseAbs().maxCoeff());
  return gap;
}

double total_weight(const Decomposition& d) {
  double w = 0.0;
  for (const auto& atom : d) w += atom.weight;
  return w;
}

LotteryAllocation complements_bps_lottery() {
  Lottery l(4);
  l << 0.5, 0, 0, 0.5;
  return {l, l};
}

TEST(DecomposeLottery, DegenerateInputIsOneAtom) {
  const Economy e = testing::complements_economy();
  const Decomposition d = decompose_lottery(e, degenerate_allocation(e, {1, 1}));
  ASSERT_EQ(d.size(), 1u);
  EXPECT_NEAR(d[0].weight, 1.0, 1e-12);
  EXPECT_EQ(d[0].allocation, (Allocation{1, 1}));
}

TEST(DecomposeLottery, ComplementsSplitIntoTwoAtoms) {
  const Economy e = testing::complements_economy();
  for (auto method : {DecomposeMethod::kIterativeRounding, DecomposeMethod::kEnumeration}) {
    const Decomposition d = decompose_lottery(e, complements_bps_lottery(), method);
    EXPECT_LE(marginal_gap(e, complements_bps_lottery(), d), 1e-6);
    EXPECT_LE(worst_slack(e, d), 1);
    std::map<Allocation, double> mass;
    for (const auto& atom : d) mass[atom.allocation] += atom.weight;
    // Both agents empty-handed never helps: each atom hands {a,b} to exactly one agent.
    EXPECT_EQ(mass.size(), 2u);
    EXPECT_NEAR(mass[(Allocation{0, 3})], 0.5, 1e-6);
    EXPECT_NEAR(mass[(Allocation{3, 0})], 0.5, 1e-6);
  }
}

TEST(DecomposeLottery, DoublyStochasticUnitDemandIsExact) {
  const Economy e = testing::make_economy("ab", {1, 1}, {{"a", "b"}, {"b", "a"}});
  Lottery half(3);
  half << 0.5, 0.5, 0;
  const LotteryAllocation a{half, half};
  const Decomposition d = decompose_lottery(e, a);
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(worst_slack(e, d), 0);
  EXPECT_LE(marginal_gap(e, a, d), 1e-6);
}

TEST(DecomposeLottery, OverDemandedMarginalsAreRejected) {
  const Economy e = testing::two_agents_economy();
  EXPECT_EQ(code_of([&] { decompose_lottery(e, degenerate_allocation(e, {0, 0})); }),
            ErrorCode::kInfeasibleMarginals);
  EXPECT_EQ(code_of([&] { enumerate_decomposition_oracle(e, degenerate_allocation(e, {0, 0}), 0); }),
            ErrorCode::kInfeasibleMarginals);
}

TEST(DecompositionOracle, ComplementsAtBothSlacks) {
  const Economy e = testing::complements_economy();
  for (int kappa : {0, 1}) {
    const Decomposition d = enumerate_decomposition_oracle(e, complements_bps_lottery(), kappa);
    EXPECT_LE(marginal_gap(e, complements_bps_lottery(), d), 1e-6);
    EXPECT_LE(worst_slack(e, d), kappa);
  }
}

TEST(DecompositionOracle, TwoAgentExampleNeedsSlack) {
  // Both agents at their budget-2 bundle {a} must coincide with both at {b}.
  const Economy e = testing::two_agents_economy();
  Lottery l(3);
  l << 0.5, 0.5, 0;
  const LotteryAllocation a{l, l};
  EXPECT_NO_THROW(enumerate_decomposition_oracle(e, a, 0));
  // A lottery that forces an over-demanded joint outcome.
  const Economy one = testing::make_economy("a", {1}, {{"a"}, {"a"}});
  Lottery sure(2);
  sure << 1, 0;
  Lottery none(2);
  none << 0, 1;
  EXPECT_EQ(code_of([&] { enumerate_decomposition_oracle(one, {sure, sure}, 0); }), ErrorCode::kInfeasibleMarginals);
  EXPECT_NO_THROW(enumerate_decomposition_oracle(one, {sure, none}, 0));
}

TEST(DecompositionOracle, OverlappingPairsNeedOneUnitOfSlack) {
  // Any two of {a,b}, {b,c}, {a,c} overlap, so an exact atom holds at most one
  // of them while the marginals ask for 3/2 bundles on average.
  const Economy e = testing::make_economy("abc", {1, 1, 1}, {{"ab"}, {"bc"}, {"ac"}});
  Lottery half(2);
  half << 0.5, 0.5;
  const LotteryAllocation a{half, half, half};
  EXPECT_EQ(code_of([&] { enumerate_decomposition_oracle(e, a, 0); }), ErrorCode::kInfeasible);
  const Decomposition d = enumerate_decomposition_oracle(e, a, 1);
  EXPECT_LE(marginal_gap(e, a, d), 1e-6);
  EXPECT_EQ(worst_slack(e, d), 1);
  const Decomposition r = decompose_lottery(e, a, DecomposeMethod::kIterativeRounding);
  EXPECT_LE(marginal_gap(e, a, r), 1e-6);
  EXPECT_LE(worst_slack(e, r), 1);
}

TEST(ConditionalBudget, Examples) {
  const AgentPreference p = testing::ranking("ab", {"a", "b"});
  EXPECT_EQ(conditional_budget(p, Eigen::Vector2d(2, 1), testing::two_agents_budget(), 1), BudgetDistribution::point(1));
  const AgentPreference one = testing::ranking("a", {"a"});
  EXPECT_EQ(conditional_budget(one, Eigen::VectorXd::Constant(1, 1.0), BudgetDistribution::uniform(0, 2), 0),
            BudgetDistribution::uniform(1, 2));
  EXPECT_EQ(conditional_budget(one, Eigen::VectorXd::Constant(1, 1.0), BudgetDistribution::uniform(1, 2), 0),
            BudgetDistribution::uniform(1, 2));
  EXPECT_EQ(code_of([&] { conditional_budget(p, Eigen::Vector2d(1, 2), BudgetDistribution::point(1), 1); }),
            ErrorCode::kZeroMassBundle);
}

TEST(BuildImplementation, TwoAgentExample) {
  const Economy e = testing::two_agents_economy();
  const std::vector<BudgetDistribution> budgets(2, testing::two_agents_budget());
  const Eigen::Vector2d p(2, 1);
  Lottery l(3);
  l << 0.5, 0.5, 0;
  const LotteryAllocation a{l, l};
  const ExPostImplementation impl = build_implementation(e, budgets, p, a, 3);
  // Unit demand: the implementation is exactly feasible.
  EXPECT_EQ(impl.slack_bound, 0);
  EXPECT_TRUE(check_implementation(e, budgets, a, impl, 0).empty());
  for (const auto& atom : impl.atoms) {
    for (int i = 0; i < 2; ++i) EXPECT_DOUBLE_EQ(atom.budgets[i], atom.allocation[i] == 0 ? 2.0 : 1.0);
  }
}

TEST(BuildImplementation, ShippedImplementationsBothPass) {
  const Economy e = testing::two_agents_economy();
  const std::vector<BudgetDistribution> budgets(2, testing::two_agents_budget());
  Lottery l(3);
  l << 0.5, 0.5, 0;
  const LotteryAllocation a{l, l};
  const ExPostImplementation correlated{
      {{0.5, {1, 0}, {1, 2}}, {0.5, {0, 1}, {2, 1}}}, Eigen::Vector2d(2, 1), 1};
  const ExPostImplementation comonotone{
      {{0.5, {1, 1}, {1, 1}}, {0.5, {0, 0}, {2, 2}}}, Eigen::Vector2d(2, 1), 1};
  EXPECT_TRUE(check_implementation(e, budgets, a, correlated, 0).empty());
  EXPECT_TRUE(check_implementation(e, budgets, a, comonotone, 1).empty());
  EXPECT_FALSE(check_implementation(e, budgets, a, comonotone, 0).empty());
}

TEST(BuildImplementation, DeterministicComplements) {
  const Economy e = testing::complements_economy();
  const std::vector<BudgetDistribution> budgets(2, BudgetDistribution::point(1));
  const ExPostImplementation impl =
      build_implementation(e, budgets, Eigen::Vector2d(1, 1), degenerate_allocation(e, {1, 1}));
  ASSERT_EQ(impl.atoms.size(), 1u);
  EXPECT_EQ(impl.atoms[0].allocation, (Allocation{1, 1}));
  EXPECT_EQ(impl.atoms[0].budgets, (std::vector<double>{1, 1}));
}

TEST(BuildImplementation, WrongBudgetIsReported) {
  const Economy e = testing::two_agents_economy();
  const std::vector<BudgetDistribution> budgets(2, testing::two_agents_budget());
  Lottery l(3);
  l << 0.5, 0.5, 0;
  ExPostImplementation impl{{{0.5, {1, 0}, {2, 2}}, {0.5, {0, 1}, {2, 1}}}, Eigen::Vector2d(2, 1), 1};
  EXPECT_FALSE(check_implementation(e, budgets, {l, l}, impl, 1).empty());
}

TEST(SampleExpost, FrequenciesFollowWeights) {
  ExPostImplementation impl{{{0.5, {0}, {1}}, {0.25, {1}, {1}}, {0.25, {2}, {1}}, {0.0, {3}, {1}}}, {}, 0};
  const long n = 1000000;
  std::vector<long> hits(4, 0);
  for (long s = 0; s < n; ++s) ++hits[sample_expost(impl, s).atom];
  const double w[] = {0.5, 0.25, 0.25};
  for (int k = 0; k < 3; ++k) {
    const double sigma = std::sqrt(w[k] * (1 - w[k]) / n);
    EXPECT_NEAR(hits[k] / double(n), w[k], 3 * sigma);
  }
  EXPECT_EQ(hits[3], 0);
  const ExPostImplementation single{{{1.0, {2}, {0.5}}}, {}, 0};
  for (long s = 0; s < 100; ++s) EXPECT_EQ(sample_expost(single, s).allocation, (Allocation{2}));
}

/// Random lotteries, shrunk toward the empty bundle until feasible in expectation.
LotteryAllocation random_feasible_lotteries(Rng& rng, const Economy& e) {
  LotteryAllocation a;
  for (const auto& agent : e.agents) {
    Lottery l = Lottery::Zero(agent.outcomes());
    for (int k = 0; k < l.size(); ++k) l[k] = uniform01(rng) < 0.5 ? 0.0 : uniform01(rng);
    if (l.sum() == 0) l[agent.empty_index()] = 1;
    a.push_back(l / l.sum());
  }
  const Eigen::VectorXd used = aggregate_expected(e, a);
  double scale = 1.0;
  for (int j = 0; j < e.num_goods(); ++j) {
    if (used[j] > e.capacities[j]) scale = std::min(scale, e.capacities[j] / used[j]);
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int z = e.agents[i].empty_index();
    const double keep = 1.0 - a[i][z];
    a[i] *= scale;
    a[i][z] = 1.0 - scale * keep;
  }
  return a;
}

TEST(DecomposeProperty, MarginalsAndSlackBound) {
  Rng rng(31);
  testing::EconomyShape shape;
  shape.multi_unit = true;
  for (int trial = 0; trial < 150; ++trial) {
    const Economy e = testing::random_economy(rng, shape);
    const LotteryAllocation a = random_feasible_lotteries(rng, e);
    const Decomposition d = decompose_lottery(e, a);
    EXPECT_NEAR(total_weight(d), 1.0, 1e-9);
    EXPECT_LE(marginal_gap(e, a, d), 1e-6) << trial;
    EXPECT_LE(worst_slack(e, d), std::max(0, e.delta() - 1)) << trial;
  }
}

TEST(DecomposeProperty, UnitDemandIsExactlyFeasible) {
  Rng rng(32);
  testing::EconomyShape shape;
  shape.unit_demand = true;
  for (int trial = 0; trial < 150; ++trial) {
    const Economy e = testing::random_economy(rng, shape);
    const LotteryAllocation a = random_feasible_lotteries(rng, e);
    const Decomposition d = decompose_lottery(e, a);
    EXPECT_LE(marginal_gap(e, a, d), 1e-6);
    EXPECT_LE(worst_slack(e, d), 0);
  }
}

TEST(DecomposeProperty, OracleAgreesOnFeasibility) {
  Rng rng(33);
  testing::EconomyShape shape;
  shape.max_agents = 3;
  shape.max_bundles = 3;
  for (int trial = 0; trial < 100; ++trial) {
    const Economy e = testing::random_economy(rng, shape);
    const LotteryAllocation a = random_feasible_lotteries(rng, e);
    const int kappa = std::max(0, e.delta() - 1);
    const Decomposition oracle = enumerate_decomposition_oracle(e, a, kappa);
    EXPECT_LE(marginal_gap(e, a, oracle), 1e-6);
    EXPECT_LE(worst_slack(e, oracle), kappa);
    const Decomposition rounded = decompose_lottery(e, a, DecomposeMethod::kIterativeRounding);
    EXPECT_LE(marginal_gap(e, a, rounded), 1e-6);
    EXPECT_LE(worst_slack(e, rounded), kappa);
  }
}

TEST(DecomposeProperty, ImplementationsOfSolvedEquilibriaCheckOut) {
  Rng rng(34);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const Economy e = testing::random_economy(rng);
    std::vector<BudgetDistribution> budgets;
    for (int i = 0; i < e.num_agents(); ++i) budgets.push_back(testing::random_budget(rng, true));
    const CeriSolution s = solve_ceri(e, budgets);
    if (!s.converged()) continue;
    ++checked;
    const ExPostImplementation impl = build_implementation(e, budgets, s, trial);
    const auto v = check_implementation(e, budgets, s.allocation, impl, std::max(0, e.delta() - 1), 1e-5);
    EXPECT_TRUE(v.empty()) << trial << ": " << (v.empty() ? "" : v.front().detail);
  }
  EXPECT_GE(checked, 50);
}

}  // namespace
}  // namespace ceri
