#ifndef CERI_DEMAND_HPP
#define CERI_DEMAND_HPP

#include "ceri/budget.hpp"
#include "ceri/core.hpp"

#include <limits>
#include <vector>

namespace ceri {

/// Budgets in [lo, hi) buy the bundle at `index` (AgentPreference indexing).
struct DemandSegment {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  int index = 0;
};

/// Step function from realized budget to optimal bundle, ordered by `lo`.
/// Consecutive segments tile [0, inf).
struct DemandProfile {
  std::vector<DemandSegment> segments;

  /// Segment containing `budget` (using the kCostTol affordability slack).
  const DemandSegment& at(double budget) const;
  /// Segment for a bundle index, or nullptr when that bundle is never demanded.
  const DemandSegment* find(int index) const;
};

/// How a point-mass budget sitting exactly on a demand threshold is treated.
enum class ThresholdPolicy {
  kAfford,  ///< weak inequality p.x <= b: the budget buys the bundle
  kReject,  ///< throw kPointMassOnThreshold
};

/// Index of the highest-ranked bundle with cost <= budget (empty bundle if none).
int optimal_index(const AgentPreference& agent, const Eigen::VectorXd& prices, double budget);

inline Bundle optimal_bundle(const AgentPreference& agent, const Eigen::VectorXd& prices, double budget) {
  return agent.bundle_at(optimal_index(agent, prices, budget), static_cast<int>(prices.size()));
}

DemandProfile demand_profile(const AgentPreference& agent, const Eigen::VectorXd& prices);

/// Random demand of the agent: probability of each outcome when the budget is
/// drawn from `budget`.
Lottery bundle_probabilities(const AgentPreference& agent, const Eigen::VectorXd& prices,
                             const BudgetDistribution& budget,
                             ThresholdPolicy policy = ThresholdPolicy::kAfford);

/// Expected bundle of a lottery.
Eigen::VectorXd expected_bundle(const AgentPreference& agent, const Lottery& lottery, int goods);

inline Eigen::VectorXd expected_demand(const AgentPreference& agent, const Eigen::VectorXd& prices,
                                       const BudgetDistribution& budget,
                                       ThresholdPolicy policy = ThresholdPolicy::kAfford) {
  return expected_bundle(agent, bundle_probabilities(agent, prices, budget, policy),
                         static_cast<int>(prices.size()));
}

}  // namespace ceri

#endif  // CERI_DEMAND_HPP
