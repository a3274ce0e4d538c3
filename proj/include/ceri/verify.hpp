#ifndef CERI_VERIFY_HPP
#define CERI_VERIFY_HPP

#include "ceri/budget.hpp"
#include "ceri/core.hpp"
#include "ceri/decompose.hpp"

#include <utility>
#include <vector>

namespace ceri {

struct SdResult {
  bool dominates = false;
  bool strict = false;
};

/// Whether lottery `x` first-order stochastically dominates `y` under the
/// agent's ranking, comparing cumulative mass at every cut with slack `tol`.
SdResult sd_dominates(const AgentPreference& agent, const Lottery& x, const Lottery& y, double tol = kProbTol);

/// Moves `mass` of agent's probability from outcome `from` to the better `to`.
struct Shift {
  int agent = 0;
  int from = 0;
  int to = 0;
  double mass = 0.0;
};

struct EfficiencyOptions {
  /// Masses at or below this are treated as outside the support.
  double support_tol = 1e-12;
  /// Goods whose expected use falls short of capacity by more than this are
  /// under-allocated and must be priced at zero.
  double slack_tol = 1e-9;
};

struct EfficiencyCertificate {
  bool efficient = false;
  /// Supporting prices when efficient: zero on under-allocated goods and
  /// p.(y - x) >= 1 whenever y beats a supported x.
  Eigen::VectorXd prices;
  /// Pareto-improving shifts when inefficient.
  std::vector<Shift> shifts;
  /// The allocation after applying `shifts`.
  LotteryAllocation improved;
};

EfficiencyCertificate is_ordinally_efficient(const Economy& e, const LotteryAllocation& allocation,
                                             const EfficiencyOptions& options = {});

/// Applies shifts to a copy of the allocation.
LotteryAllocation apply_shifts(const LotteryAllocation& allocation, const std::vector<Shift>& shifts);

/// Discrete budgets putting each agent's bundle mass at that bundle's cost.
/// Throws kNotCertified unless `prices` support the allocation.
std::vector<BudgetDistribution> budgets_from_prices(const Economy& e, const LotteryAllocation& allocation,
                                                    const Eigen::VectorXd& prices,
                                                    const EfficiencyOptions& options = {});

/// Pareto efficiency of a deterministic allocation against some capacity
/// vector between its own aggregate and c + kappa. Throws kTooLarge when the
/// search exceeds 10^6 nodes.
bool is_kappa_expost_efficient(const Economy& e, const Allocation& allocation, int kappa);

/// Agent j's outcome index as seen by agent i: foreign or unacceptable
/// bundles map to i's empty bundle.
int project_outcome(const Economy& e, int i, int j, int outcome);

/// Pairs (i, j) where i's lottery fails to sd-dominate j's from i's view.
std::vector<std::pair<int, int>> envy_pairs(const Economy& e, const LotteryAllocation& allocation,
                                            double tol = kProbTol);

inline bool is_ordinal_envy_free(const Economy& e, const LotteryAllocation& allocation, double tol = kProbTol) {
  return envy_pairs(e, allocation, tol).empty();
}

struct Ef1Failure {
  int atom = 0;
  int envious = 0;
  int envied = 0;
};

/// Whether i envies j's bundle even after removing any single unit from it.
bool envies_beyond_one(const Economy& e, int i, int own_outcome, int j, int other_outcome);

std::vector<Ef1Failure> ef1_failures(const Economy& e, const ExPostImplementation& impl);

inline bool is_ef1(const Economy& e, const ExPostImplementation& impl) { return ef1_failures(e, impl).empty(); }

/// Euclidean distance between aggregate demand and capacity.
double l2_excess(const Economy& e, const Allocation& allocation);

struct Selection {
  Allocation allocation;
  double excess = 0.0;
  /// Largest Euclidean diameter of any agent's support.
  double diameter = 0.0;
  /// D sqrt(m) / 2.
  double diameter_bound = 0.0;
  /// sqrt(delta m / 2); reported, not enforced.
  double size_bound = 0.0;
  /// Distance of the expected aggregate from capacity (zero at exact clearing).
  double expected_excess = 0.0;
  /// excess <= diameter_bound + expected_excess.
  bool within_bound = false;
};

/// Picks one support bundle per agent minimizing l2_excess. Throws kTooLarge
/// beyond 10^6 joint combinations.
Selection shapley_folkman_select(const Economy& e, const LotteryAllocation& allocation);

}  // namespace ceri

#endif  // CERI_VERIFY_HPP
