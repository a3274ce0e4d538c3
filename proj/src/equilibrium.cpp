#include "ceri/equilibrium.hpp"

#include "ceri/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ceri {

namespace {

constexpr double kGrow = 1.2;
constexpr double kShrink = 0.5;

double weight_of(const AgentWeights& weights, int i) { return weights.empty() ? 1.0 : weights[i]; }

double total_weight(const Economy& e, const AgentWeights& weights) {
  double n = 0.0;
  for (int i = 0; i < e.num_agents(); ++i) n += weight_of(weights, i);
  return n;
}

void check_inputs(const Economy& e, const std::vector<BudgetDistribution>& budgets, const AgentWeights& weights) {
  if (e.num_agents() == 0 || e.num_goods() == 0) throw Error(ErrorCode::kEmptyEconomy, "economy has no agents or goods");
  if (static_cast<int>(budgets.size()) != e.num_agents()) {
    throw Error(ErrorCode::kInvalidInput, "one budget distribution per agent is required");
  }
  if (!weights.empty() && static_cast<int>(weights.size()) != e.num_agents()) {
    throw Error(ErrorCode::kInvalidInput, "one weight per agent is required");
  }
}

bool clears(const Eigen::VectorXd& prices, const Eigen::VectorXd& excess, const SolverConfig& config) {
  for (Eigen::Index j = 0; j < prices.size(); ++j) {
    if (excess[j] > config.tol_clearing) return false;
    if (prices[j] > config.tol_slackness && std::abs(excess[j]) > config.tol_clearing) return false;
  }
  return true;
}

}  // namespace

Eigen::VectorXd excess_demand(const Economy& e, const std::vector<BudgetDistribution>& budgets,
                              const Eigen::VectorXd& prices, const AgentWeights& weights) {
  Eigen::VectorXd z = -e.capacities.cast<double>();
  for (int i = 0; i < e.num_agents(); ++i) {
    const double w = weight_of(weights, i);
    if (w == 0.0) continue;
    z += w * expected_demand(e.agents[i], prices, budgets[i]);
  }
  return z;
}

PriceVector fixed_point_step(const PriceVector& prices, const Eigen::VectorXd& excess, double step) {
  PriceVector next = prices;
  next.values = (prices.values + step * excess).cwiseMax(0.0).cwiseMin(prices.cap);
  return next;
}

double clearing_residual(const Eigen::VectorXd& prices, const Eigen::VectorXd& excess) {
  return (prices - (prices + excess).cwiseMax(0.0)).cwiseAbs().maxCoeff();
}

double default_price_cap(const Economy& e, const std::vector<BudgetDistribution>& budgets,
                         const AgentWeights& weights) {
  double max_budget = 0.0;
  for (const auto& b : budgets) max_budget = std::max(max_budget, b.max_support());
  return (1.0 + max_budget) * std::max(1.0, total_weight(e, weights)) * std::max(1, e.delta());
}

CeriSolution solve_ceri(const Economy& e, const std::vector<BudgetDistribution>& budgets, const SolverConfig& config,
                        const AgentWeights& weights) {
  check_inputs(e, budgets, weights);
  if (!(config.damping > 0.0 && config.damping <= 1.0)) {
    throw Error(ErrorCode::kInvalidInput, "damping must lie in (0, 1]");
  }
  if (!(config.tol_clearing > 0.0 && config.tol_slackness > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "tolerances must be positive");
  }
  const int m = e.num_goods();
  const double cap = config.price_cap > 0.0 ? config.price_cap : default_price_cap(e, budgets, weights);

  double max_budget = 0.0;
  double spread = 0.0;
  for (const auto& b : budgets) {
    max_budget = std::max(max_budget, b.max_support());
    spread = std::max(spread, b.max_support() - b.min_support());
  }
  if (spread <= 0.0) spread = max_budget > 0.0 ? max_budget : 1.0;
  // Demand responds to price over roughly one budget spread, summed over
  // n agents; scale the step so the undamped gain is O(1).
  const double base_step = spread / std::max(1.0, total_weight(e, weights));
  const double max_step = 10.0 * std::max(max_budget, spread);

  CeriSolution best;
  best.prices.cap = cap;
  double best_merit = std::numeric_limits<double>::infinity();
  int total_iters = 0;

  for (int restart = 0; restart <= std::max(0, config.restarts); ++restart) {
    PriceVector p{Eigen::VectorXd::Zero(m), cap};
    if (restart > 0) {
      Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(restart)));
      for (int j = 0; j < m; ++j) p.values[j] = uniform01(rng) * std::max(max_budget, 1e-9);
    }
    // Per-good step sizes: halve when a good's excess flips sign (overshoot),
    // grow while it keeps its sign so flat stretches of demand are crossed.
    Eigen::VectorXd step = Eigen::VectorXd::Constant(m, config.damping * base_step);
    Eigen::VectorXd previous = Eigen::VectorXd::Zero(m);
    for (int it = 0; it < config.max_iters; ++it) {
      ++total_iters;
      const Eigen::VectorXd z = excess_demand(e, budgets, p.values, weights);
      const double merit = clearing_residual(p.values, z);
      const bool done = clears(p.values, z, config);
      if (merit < best_merit || done) {
        best_merit = merit;
        best.prices = p;
        best.residual = z;
        best.restart = restart;
      }
      if (done) {
        best.status = SolveStatus::kConverged;
        break;
      }
      for (int j = 0; j < m; ++j) {
        if (z[j] * previous[j] < 0.0) {
          step[j] *= kShrink;
        } else {
          step[j] = std::min(step[j] * kGrow, max_step);
        }
      }
      p.values = (p.values + step.cwiseProduct(z)).cwiseMax(0.0).cwiseMin(cap);
      previous = z;
      // A good pinned at zero price with excess supply has no overshoot to detect.
      for (int j = 0; j < m; ++j) {
        if (p.values[j] == 0.0 && z[j] < 0.0) previous[j] = 0.0;
      }
    }
    if (best.converged()) break;
  }

  best.allocation.clear();
  for (int i = 0; i < e.num_agents(); ++i) {
    best.allocation.push_back(bundle_probabilities(e.agents[i], best.prices.values, budgets[i]));
  }
  best.iterations = total_iters;
  return best;
}

CeriReport verify_ceri(const Economy& e, const std::vector<BudgetDistribution>& budgets,
                       const Eigen::VectorXd& prices, const LotteryAllocation& allocation, double tol,
                       const AgentWeights& weights) {
  check_inputs(e, budgets, weights);
  CeriReport report;
  auto fail = [&](std::string kind, std::string detail) {
    report.is_ceri = false;
    report.violations.push_back({std::move(kind), std::move(detail)});
  };
  if (prices.size() != e.num_goods() || (prices.array() < 0.0).any()) {
    fail("prices", "price vector must be nonnegative with one entry per good");
    return report;
  }
  if (static_cast<int>(allocation.size()) != e.num_agents()) {
    fail("shape", "one lottery per agent is required");
    return report;
  }
  Eigen::VectorXd demand = Eigen::VectorXd::Zero(e.num_goods());
  for (int i = 0; i < e.num_agents(); ++i) {
    const Lottery expected = bundle_probabilities(e.agents[i], prices, budgets[i]);
    if (allocation[i].size() != expected.size()) {
      fail("shape", "agent " + std::to_string(i) + " lottery length mismatch");
      continue;
    }
    const double gap = (allocation[i] - expected).cwiseAbs().maxCoeff();
    if (gap > tol) {
      std::ostringstream msg;
      msg << "agent " << i << " lottery differs from its random demand by " << gap;
      fail("demand", msg.str());
    }
    demand += weight_of(weights, i) * expected_bundle(e.agents[i], allocation[i], e.num_goods());
  }
  for (int j = 0; j < e.num_goods(); ++j) {
    const double excess = demand[j] - e.capacities[j];
    const std::string good = e.good_name(j);
    if (excess > tol) {
      std::ostringstream msg;
      msg << "good " << good << " over-demanded by " << excess;
      fail("over-demand", msg.str());
    } else if (prices[j] > tol && excess < -tol) {
      std::ostringstream msg;
      msg << "good " << good << " priced " << prices[j] << " but under-demanded by " << -excess;
      fail("slackness", msg.str());
    }
  }
  return report;
}

}  // namespace ceri
