#ifndef CERI_DECOMPOSE_HPP
#define CERI_DECOMPOSE_HPP

#include "ceri/budget.hpp"
#include "ceri/core.hpp"
#include "ceri/equilibrium.hpp"

#include <cstdint>
#include <vector>

namespace ceri {

struct WeightedAllocation {
  double weight = 0.0;
  Allocation allocation;
};

using Decomposition = std::vector<WeightedAllocation>;

enum class DecomposeMethod {
  kAuto,               ///< enumeration for tiny joint supports, rounding otherwise
  kIterativeRounding,  ///< column generation priced by iterative LP rounding
  kEnumeration,        ///< exact LP over every joint support combination
};

/// Writes a lottery allocation as a convex combination of deterministic
/// allocations, each exceeding capacity by at most delta - 1 per good.
/// `tol` bounds how far expected aggregate demand may exceed capacity.
Decomposition decompose_lottery(const Economy& e, const LotteryAllocation& allocation,
                                DecomposeMethod method = DecomposeMethod::kAuto, double tol = 1e-6);

/// Independent oracle: LP over all joint support combinations whose aggregate
/// is at most c + kappa. Throws kInfeasible when none mixes to the marginals
/// and kTooLarge beyond 10^5 combinations.
Decomposition enumerate_decomposition_oracle(const Economy& e, const LotteryAllocation& allocation, int kappa,
                                             double tol = 1e-6);

/// Budget distribution conditioned on the agent demanding bundle `index`.
BudgetDistribution conditional_budget(const AgentPreference& agent, const Eigen::VectorXd& prices,
                                      const BudgetDistribution& budget, int index);

struct Atom {
  double weight = 0.0;
  Allocation allocation;
  std::vector<double> budgets;
};

struct ExPostImplementation {
  std::vector<Atom> atoms;
  Eigen::VectorXd prices;
  int slack_bound = 0;
};

ExPostImplementation build_implementation(const Economy& e, const std::vector<BudgetDistribution>& budgets,
                                          const Eigen::VectorXd& prices, const LotteryAllocation& allocation,
                                          std::uint64_t seed = 0, DecomposeMethod method = DecomposeMethod::kAuto);

inline ExPostImplementation build_implementation(const Economy& e, const std::vector<BudgetDistribution>& budgets,
                                                 const CeriSolution& ceri, std::uint64_t seed = 0) {
  return build_implementation(e, budgets, ceri.prices.values, ceri.allocation, seed);
}

struct ExPostDraw {
  int atom = 0;
  Allocation allocation;
  std::vector<double> budgets;
};

ExPostDraw sample_expost(const ExPostImplementation& impl, std::uint64_t seed);

/// Every way `impl` fails to implement `allocation` at prices impl.prices:
/// weights, marginals, per-atom slack, per-atom optimality, budget supports
/// and segment-wise budget mass.
std::vector<Violation> check_implementation(const Economy& e, const std::vector<BudgetDistribution>& budgets,
                                            const LotteryAllocation& allocation, const ExPostImplementation& impl,
                                            int kappa, double tol = 1e-6);

/// Per-agent marginal lottery of a decomposition.
LotteryAllocation marginals(const Economy& e, const Decomposition& decomposition);

}  // namespace ceri

#endif  // CERI_DECOMPOSE_HPP
