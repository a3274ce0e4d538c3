#include "ceri/demand.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ceri {

const DemandSegment& DemandProfile::at(double budget) const {
  for (auto it = segments.rbegin(); it != segments.rend(); ++it) {
    if (it->lo <= budget + kCostTol) return *it;
  }
  return segments.front();
}

const DemandSegment* DemandProfile::find(int index) const {
  for (const auto& s : segments) {
    if (s.index == index) return &s;
  }
  return nullptr;
}

int optimal_index(const AgentPreference& agent, const Eigen::VectorXd& prices, double budget) {
  for (int k = 0; k < agent.size(); ++k) {
    if (bundle_cost(agent.ranked[k], prices) <= budget + kCostTol) return k;
  }
  return agent.empty_index();
}

DemandProfile demand_profile(const AgentPreference& agent, const Eigen::VectorXd& prices) {
  // Walk down the ranking keeping the cheapest cost seen so far: a bundle is
  // demanded exactly on budgets between its own cost and that running minimum.
  DemandProfile profile;
  double cheapest_above = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= agent.size(); ++k) {
    const double cost = k == agent.empty_index() ? 0.0 : std::max(0.0, bundle_cost(agent.ranked[k], prices));
    if (cost < cheapest_above - kCostTol) {
      profile.segments.push_back({cost, cheapest_above, k});
      cheapest_above = cost;
    }
    if (cheapest_above <= 0.0) break;
  }
  std::reverse(profile.segments.begin(), profile.segments.end());
  // The cheapest demanded bundle must cover [0, ...).
  profile.segments.front().lo = 0.0;
  return profile;
}

Lottery bundle_probabilities(const AgentPreference& agent, const Eigen::VectorXd& prices,
                             const BudgetDistribution& budget, ThresholdPolicy policy) {
  const DemandProfile profile = demand_profile(agent, prices);
  if (policy == ThresholdPolicy::kReject) {
    for (const auto& c : budget.components()) {
      const auto* point = std::get_if<PointMass>(&c.piece);
      if (!point || c.weight <= 0.0) continue;
      for (std::size_t s = 1; s < profile.segments.size(); ++s) {
        if (std::abs(point->value - profile.segments[s].lo) <= kCostTol) {
          std::ostringstream msg;
          msg << "point-mass budget " << point->value << " equals a demand threshold";
          throw Error(ErrorCode::kPointMassOnThreshold, msg.str());
        }
      }
    }
  }
  Lottery mass = Lottery::Zero(agent.outcomes());
  for (const auto& s : profile.segments) {
    const double lo = s.lo <= 0.0 ? -1.0 : s.lo - kCostTol;
    const double hi = std::isinf(s.hi) ? s.hi : s.hi - kCostTol;
    mass[s.index] += std::isinf(hi) ? 1.0 - budget.cdf_below(lo) : budget.mass_between(lo, hi);
  }
  return mass;
}

Eigen::VectorXd expected_bundle(const AgentPreference& agent, const Lottery& lottery, int goods) {
  Eigen::VectorXd total = Eigen::VectorXd::Zero(goods);
  for (int k = 0; k < agent.size(); ++k) {
    if (lottery[k] != 0.0) total += lottery[k] * agent.ranked[k].cast<double>();
  }
  return total;
}

}  // namespace ceri
