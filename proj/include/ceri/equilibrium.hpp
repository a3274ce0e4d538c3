#ifndef CERI_EQUILIBRIUM_HPP
#define CERI_EQUILIBRIUM_HPP

#include "ceri/budget.hpp"
#include "ceri/core.hpp"
#include "ceri/demand.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ceri {

struct PriceVector {
  Eigen::VectorXd values;
  double cap = 1.0;
};

struct SolverConfig {
  /// Price cap P; nonpositive selects (1 + max budget) * n * delta.
  double price_cap = 0.0;
  /// Initial step multiplier in (0, 1]. Steps then adapt per good: halved
  /// when that good's excess changes sign, grown by 20% otherwise.
  double damping = 1.0;
  double tol_clearing = 1e-6;
  double tol_slackness = 1e-6;
  int max_iters = 20000;
  int restarts = 8;
  std::uint64_t seed = 0;
};

enum class SolveStatus { kConverged, kNotConverged };

struct CeriSolution {
  PriceVector prices;
  LotteryAllocation allocation;
  /// Aggregate expected demand minus capacity, per good.
  Eigen::VectorXd residual;
  int iterations = 0;
  int restart = 0;
  SolveStatus status = SolveStatus::kNotConverged;

  bool converged() const { return status == SolveStatus::kConverged; }
};

/// Thrown by mechanisms whose equilibrium solve failed; carries the best
/// iterate found.
class NotConverged : public Error {
 public:
  explicit NotConverged(CeriSolution best)
      : Error(ErrorCode::kNotConverged, "no equilibrium within tolerance"), best_(std::move(best)) {}
  const CeriSolution& best() const { return best_; }

 private:
  CeriSolution best_;
};

/// Per-agent multiplicity; agent i stands for `weights[i]` identical agents.
/// An empty vector means every weight is one.
using AgentWeights = std::vector<double>;

Eigen::VectorXd excess_demand(const Economy& e, const std::vector<BudgetDistribution>& budgets,
                              const Eigen::VectorXd& prices, const AgentWeights& weights = {});

/// One application of p'_j = min{(p_j + step * excess_j)^+, P}; step = 1 is the
/// undamped map whose fixed points are exactly the equilibria.
PriceVector fixed_point_step(const PriceVector& prices, const Eigen::VectorXd& excess, double step = 1.0);

/// The default price cap for an economy and budget profile.
double default_price_cap(const Economy& e, const std::vector<BudgetDistribution>& budgets,
                         const AgentWeights& weights = {});

CeriSolution solve_ceri(const Economy& e, const std::vector<BudgetDistribution>& budgets,
                        const SolverConfig& config = {}, const AgentWeights& weights = {});

struct CeriReport {
  bool is_ceri = true;
  std::vector<Violation> violations;
};

/// Checks the equilibrium conditions at absolute tolerance `tol`: lotteries
/// equal the recomputed random demands, no good is over-demanded, and goods
/// priced above `tol` clear.
CeriReport verify_ceri(const Economy& e, const std::vector<BudgetDistribution>& budgets,
                       const Eigen::VectorXd& prices, const LotteryAllocation& allocation, double tol = 1e-6,
                       const AgentWeights& weights = {});

/// Natural residual |p - clamp(p + z)|_inf; zero exactly at equilibria.
double clearing_residual(const Eigen::VectorXd& prices, const Eigen::VectorXd& excess);

}  // namespace ceri

#endif  // CERI_EQUILIBRIUM_HPP
