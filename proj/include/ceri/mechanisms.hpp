#ifndef CERI_MECHANISMS_HPP
#define CERI_MECHANISMS_HPP

#include "ceri/budget.hpp"
#include "ceri/core.hpp"
#include "ceri/decompose.hpp"
#include "ceri/eating.hpp"
#include "ceri/equilibrium.hpp"
#include "ceri/grid.hpp"
#include "ceri/simplex.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ceri {

struct MechanismOutcome {
  std::string mechanism;
  LotteryAllocation allocation;
  std::optional<ExPostImplementation> implementation;
  Eigen::VectorXd prices;
  std::vector<BudgetDistribution> budgets;
  /// Type counts and their rounded grid point (CERI-L only).
  std::vector<long> type_counts;
  std::vector<long> grid_point;
  long lambda = 0;
  int solver_iterations = 0;
  std::vector<std::uint64_t> seed_trail;
};

/// Prices and budgets under which a mechanism's allocation is a CERI.
struct CeriForm {
  Eigen::VectorXd prices;
  std::vector<BudgetDistribution> budgets;
};

/// Budgets U[1, 1 + epsilon] for everyone, with 0 < epsilon < 1/m.
MechanismOutcome ceri_s(const Economy& e, double epsilon, std::uint64_t seed, const SolverConfig& config = {});

/// Distinct reported preferences and how many agents report each.
struct TypeCensus {
  std::vector<AgentPreference> types;
  std::vector<long> counts;
  std::vector<int> agent_type;
};

/// Types in order of first appearance. With a universe, types follow the
/// universe's order (zero counts included) and every report must belong to it.
TypeCensus census(const Economy& e, const std::vector<AgentPreference>& universe = {});

struct CeriLOptions {
  /// Grid step; zero selects floor(tau sqrt(n)).
  long lambda = 0;
  /// Fixed type universe. Its size sets tau and its order the grid
  /// coordinates, so a misreport cannot reshuffle the grid.
  std::vector<AgentPreference> universe;
  /// Skip the ex-post implementation (lotteries only).
  bool implement = true;
  SolverConfig solver;
};

MechanismOutcome ceri_l(const Economy& e, std::uint64_t seed, const CeriLOptions& options = {});

/// The CERI-L budget: U[1, delta/(delta-1)], or U[1, 2] for unit demand.
BudgetDistribution ceri_l_budget(int delta);

/// Each agent in turn takes its best bundle that still fits; `order` lists
/// agent indices.
Allocation serial_dictatorship(const Economy& e, const std::vector<int>& order);

/// The k-th agent in `order` gets budget 1/k; a good consumed to exhaustion
/// costs the smallest of (1/k) / |x| over its consumers, other goods are free.
/// When that split fails verification (multi-unit bundles), prices come from
/// a max-margin LP instead. Outcomes no price vector supports at budgets 1/k
/// keep the split prices, and verify_ceri reports them.
CeriForm sd_to_ceri(const Economy& e, const std::vector<int>& order, const Allocation& allocation);

/// Random serial dictatorship by enumerating all n! orders. Throws kTooLarge
/// for n > 9.
LotteryAllocationOf<Rational> rsd_exact(const Economy& e);

/// Exact for n <= 9, otherwise the average of 10^5 seeded orders.
LotteryAllocation rsd(const Economy& e, std::uint64_t seed = 0);

/// Probabilistic serial: unit-speed eating of single goods.
EatingTrace ps(const Economy& e);

/// Price = 1 - exhaustion time (zero if never exhausted); budgets U[0, 1].
CeriForm ps_to_ceri(const Economy& e, const EatingTrace& trace);

/// Bundled probabilistic serial, optionally with eating speeds.
EatingTrace bps(const Economy& e, const EatingSpeeds& speeds = {});

/// Price (delta + 1)^-r for the r-th exhaustion event, zero if never
/// exhausted. Each eating interval puts its mass uniformly on the budget
/// segment that buys that bundle at these prices.
CeriForm bps_to_ceri(const Economy& e, const EatingTrace& trace);

/// A mechanism as seen by the probe: lotteries for an economy and a seed.
using LotteryMechanism = std::function<LotteryAllocation(const Economy&, std::uint64_t)>;

struct SpProbeReport {
  long samples = 0;
  long solver_failures = 0;
  /// Per usable sample: truth sd-dominates every misreport for every agent.
  std::vector<bool> truthful;
  double probability = 0.0;
  /// Standard error of `probability`.
  double std_error = 0.0;
};

struct SpProbeOptions {
  /// Test only one agent per group with identical preferences and misreport
  /// lists; sound for anonymous mechanisms.
  bool anonymous = true;
  double tol = kProbTol;
};

/// For each sample seed, recomputes the outcome with each agent's misreport
/// under the same seed and checks that truth sd-dominates it.
SpProbeReport sp_probe(const Economy& e, const LotteryMechanism& mechanism,
                       const std::vector<std::vector<AgentPreference>>& misreports, long samples, std::uint64_t seed,
                       const SpProbeOptions& options = {});

/// Every ranking of single goods: all orderings of every subset (including
/// the empty list), or only full permutations.
std::vector<AgentPreference> unit_demand_rankings(int goods, bool full_only);

}  // namespace ceri

#endif  // CERI_MECHANISMS_HPP
