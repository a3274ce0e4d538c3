#include "ceri/decompose.hpp"

#include "ceri/demand.hpp"
#include "ceri/random.hpp"
#include "ceri/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace ceri {

namespace {

constexpr double kMassFloor = 1e-12;
constexpr double kLpTol = 1e-9;
constexpr int kMaxColumns = 20000;
constexpr long kEnumerationLimit = 100000;
constexpr long kAutoEnumerationLimit = 64;

// Support of every agent's lottery, with masses renormalized to sum to one.
struct Marginals {
  std::vector<std::vector<int>> support;
  std::vector<std::vector<double>> mass;
  // Row of pair (i, position in support) in the stacked marginal constraints.
  std::vector<std::vector<int>> row;
  int rows = 0;
};

Marginals collect_marginals(const Economy& e, const LotteryAllocation& allocation) {
  Marginals mg;
  mg.support.resize(e.num_agents());
  mg.mass.resize(e.num_agents());
  mg.row.resize(e.num_agents());
  for (int i = 0; i < e.num_agents(); ++i) {
    double total = 0.0;
    for (int k = 0; k < allocation[i].size(); ++k) {
      if (allocation[i][k] > kMassFloor) {
        mg.support[i].push_back(k);
        mg.mass[i].push_back(allocation[i][k]);
        total += allocation[i][k];
      }
    }
    for (double& q : mg.mass[i]) q /= total;
    for (std::size_t s = 0; s < mg.support[i].size(); ++s) mg.row[i].push_back(mg.rows++);
  }
  return mg;
}

void check_marginal_input(const Economy& e, const LotteryAllocation& allocation, double tol) {
  const auto problems = validate_allocation(e, allocation);
  if (!problems.empty()) throw Error(ErrorCode::kInvalidInput, problems.front().detail);
  const Eigen::VectorXd excess = aggregate_expected(e, allocation) - e.capacities.cast<double>();
  for (int j = 0; j < e.num_goods(); ++j) {
    if (excess[j] > tol) {
      std::ostringstream msg;
      msg << "expected demand for good " << e.good_name(j) << " exceeds capacity by " << excess[j];
      throw Error(ErrorCode::kInfeasibleMarginals, msg.str());
    }
  }
}

Eigen::VectorXi column_aggregate(const Economy& e, const Allocation& column) {
  return aggregate(e, column);
}

// Minimizes sum_i cost[i][s] over one support bundle per agent subject to the
// capacity rows `capacity`, by iterative rounding of the LP relaxation. Fixes
// integral variables, drops zero variables, and drops a capacity row once
// even rounding every remaining variable up stays within `slack` of it. The
// result costs at most the relaxation's optimum.
Allocation round_assignment(const Economy& e, const Marginals& mg, const std::vector<std::vector<double>>& cost,
                            Eigen::VectorXd capacity, int slack) {
  const int n = e.num_agents();
  const int m = e.num_goods();
  Allocation choice(n, -1);
  std::vector<std::vector<bool>> alive(n);
  for (int i = 0; i < n; ++i) alive[i].assign(mg.support[i].size(), true);
  std::vector<bool> row_active(m, true);

  for (;;) {
    struct Var {
      int agent;
      int slot;
    };
    std::vector<Var> vars;
    std::vector<int> agents;
    for (int i = 0; i < n; ++i) {
      if (choice[i] >= 0) continue;
      agents.push_back(i);
      for (std::size_t s = 0; s < alive[i].size(); ++s) {
        if (alive[i][s]) vars.push_back({i, static_cast<int>(s)});
      }
    }
    if (agents.empty()) break;
    std::vector<int> goods;
    for (int j = 0; j < m; ++j) {
      if (row_active[j]) goods.push_back(j);
    }

    LinearProgram<double> lp;
    const int rows = static_cast<int>(agents.size() + goods.size());
    lp.A = Eigen::MatrixXd::Zero(rows, static_cast<int>(vars.size()));
    lp.b = Eigen::VectorXd::Zero(rows);
    lp.objective = Eigen::VectorXd::Zero(static_cast<int>(vars.size()));
    lp.sense.assign(rows, Sense::kLessEqual);
    for (std::size_t a = 0; a < agents.size(); ++a) {
      lp.sense[a] = Sense::kEqual;
      lp.b[a] = 1.0;
    }
    for (std::size_t g = 0; g < goods.size(); ++g) lp.b[agents.size() + g] = std::max(0.0, capacity[goods[g]]);
    for (std::size_t v = 0; v < vars.size(); ++v) {
      const int i = vars[v].agent;
      const int k = mg.support[i][vars[v].slot];
      const auto a = std::find(agents.begin(), agents.end(), i) - agents.begin();
      lp.A(a, v) = 1.0;
      const Bundle x = e.bundle_of(i, k);
      for (std::size_t g = 0; g < goods.size(); ++g) lp.A(agents.size() + g, v) = x[goods[g]];
      lp.objective[v] = -cost[i][vars[v].slot];
    }
    const auto result = solve_lp(lp);
    if (result.status != LpStatus::kOptimal) {
      throw Error(ErrorCode::kLpFailure, "rounding relaxation has no optimal solution");
    }

    bool progress = false;
    for (std::size_t v = 0; v < vars.size(); ++v) {
      const int i = vars[v].agent;
      if (choice[i] >= 0) continue;
      const double y = result.x[v];
      if (y >= 1.0 - kLpTol) {
        choice[i] = mg.support[i][vars[v].slot];
        capacity -= e.bundle_of(i, choice[i]).cast<double>();
        progress = true;
      } else if (y <= kLpTol) {
        alive[i][vars[v].slot] = false;
        progress = true;
      }
    }
    if (progress) continue;

    // Every remaining variable is strictly fractional.
    int fallback = -1;
    double fallback_gap = 0.0;
    for (int j : goods) {
      double rounded_up = 0.0;
      for (const auto& v : vars) rounded_up += e.bundle_of(v.agent, mg.support[v.agent][v.slot])[j];
      const double gap = rounded_up - capacity[j];
      if (gap <= slack + kLpTol) {
        row_active[j] = false;
        progress = true;
      } else if (fallback < 0 || gap < fallback_gap) {
        fallback = j;
        fallback_gap = gap;
      }
    }
    if (!progress) {
      if (fallback < 0) throw Error(ErrorCode::kLpFailure, "iterative rounding made no progress");
      row_active[fallback] = false;
    }
  }
  return choice;
}

// Master LP over the current columns: maximize total weight with every
// (agent, bundle) row capped at its marginal mass.
LpResult<double> solve_master(const Marginals& mg, const std::vector<Allocation>& columns) {
  LinearProgram<double> lp;
  lp.A = Eigen::MatrixXd::Zero(mg.rows, static_cast<int>(columns.size()));
  lp.b = Eigen::VectorXd::Zero(mg.rows);
  lp.sense.assign(mg.rows, Sense::kLessEqual);
  lp.objective = Eigen::VectorXd::Ones(static_cast<int>(columns.size()));
  for (std::size_t i = 0; i < mg.support.size(); ++i) {
    for (std::size_t s = 0; s < mg.support[i].size(); ++s) lp.b[mg.row[i][s]] = mg.mass[i][s];
  }
  for (std::size_t t = 0; t < columns.size(); ++t) {
    for (std::size_t i = 0; i < mg.support.size(); ++i) {
      const auto it = std::find(mg.support[i].begin(), mg.support[i].end(), columns[t][i]);
      lp.A(mg.row[i][it - mg.support[i].begin()], t) = 1.0;
    }
  }
  return solve_lp(lp);
}

Decomposition finish(const std::vector<Allocation>& columns, const Eigen::VectorXd& weights) {
  Decomposition out;
  double total = 0.0;
  for (std::size_t t = 0; t < columns.size(); ++t) {
    if (weights[t] > kMassFloor) {
      out.push_back({weights[t], columns[t]});
      total += weights[t];
    }
  }
  for (auto& atom : out) atom.weight /= total;
  return out;
}

Decomposition column_generation(const Economy& e, const LotteryAllocation& allocation) {
  const Marginals mg = collect_marginals(e, allocation);
  const int slack = std::max(0, e.delta() - 1);
  // Pricing keeps integral capacities: fractional ones would leave the
  // relaxation's vertices fractional and defeat the rounding bound. Input that
  // overshoots capacity by up to `tol` per good may then fall short of total
  // weight one by at most that overshoot, which `finish` renormalizes away.
  const Eigen::VectorXd capacity = e.capacities.cast<double>();
  const Eigen::VectorXd excess = aggregate_expected(e, allocation) - capacity;
  const double shortfall = kLpTol + excess.cwiseMax(0.0).sum();

  std::vector<std::vector<double>> cost(e.num_agents());
  for (int i = 0; i < e.num_agents(); ++i) {
    for (double q : mg.mass[i]) cost[i].push_back(-q);
  }
  std::vector<Allocation> columns{round_assignment(e, mg, cost, capacity, slack)};

  for (int round = 0; round < kMaxColumns; ++round) {
    const auto master = solve_master(mg, columns);
    if (master.status != LpStatus::kOptimal) throw Error(ErrorCode::kLpFailure, "decomposition master LP failed");
    if (master.objective >= 1.0 - kLpTol) return finish(columns, master.x);
    for (int i = 0; i < e.num_agents(); ++i) {
      for (std::size_t s = 0; s < mg.support[i].size(); ++s) cost[i][s] = master.duals[mg.row[i][s]];
    }
    Allocation column = round_assignment(e, mg, cost, capacity, slack);
    double reduced = 1.0;
    for (int i = 0; i < e.num_agents(); ++i) {
      const auto it = std::find(mg.support[i].begin(), mg.support[i].end(), column[i]);
      reduced -= cost[i][it - mg.support[i].begin()];
    }
    if (reduced <= kLpTol || std::find(columns.begin(), columns.end(), column) != columns.end()) {
      if (master.objective >= 1.0 - shortfall) return finish(columns, master.x);
      std::ostringstream msg;
      msg << "column generation stalled at total weight " << master.objective;
      throw Error(ErrorCode::kLpFailure, msg.str());
    }
    columns.push_back(std::move(column));
  }
  throw Error(ErrorCode::kLpFailure, "column generation exceeded its column budget");
}

long joint_support_size(const Marginals& mg, long cap) {
  long total = 1;
  for (const auto& s : mg.support) {
    total *= static_cast<long>(s.size());
    if (total > cap) return cap + 1;
  }
  return total;
}

}  // namespace

LotteryAllocation marginals(const Economy& e, const Decomposition& decomposition) {
  LotteryAllocation out;
  for (const auto& agent : e.agents) out.push_back(Lottery::Zero(agent.outcomes()));
  for (const auto& atom : decomposition) {
    for (int i = 0; i < e.num_agents(); ++i) out[i][atom.allocation[i]] += atom.weight;
  }
  return out;
}

Decomposition enumerate_decomposition_oracle(const Economy& e, const LotteryAllocation& allocation, int kappa,
                                             double tol) {
  check_marginal_input(e, allocation, tol);
  const Marginals mg = collect_marginals(e, allocation);
  if (joint_support_size(mg, kEnumerationLimit) > kEnumerationLimit) {
    throw Error(ErrorCode::kTooLarge, "joint support exceeds 100000 combinations");
  }
  const int n = e.num_agents();
  std::vector<Allocation> columns;
  std::vector<double> overflow;
  std::vector<int> digit(n, 0);
  for (;;) {
    Allocation column(n);
    for (int i = 0; i < n; ++i) column[i] = mg.support[i][digit[i]];
    const Eigen::VectorXi over = column_aggregate(e, column) - e.capacities;
    if (over.maxCoeff() <= kappa) {
      columns.push_back(column);
      overflow.push_back(over.cwiseMax(0).sum());
    }
    int i = 0;
    while (i < n && ++digit[i] == static_cast<int>(mg.support[i].size())) digit[i++] = 0;
    if (i == n) break;
  }
  if (columns.empty()) throw Error(ErrorCode::kInfeasible, "no joint allocation fits within c + kappa");

  // Closest mixture to the marginals, then the least total overflow. Input
  // that overshoots capacity within `tol` may admit no exact mixture, so each
  // marginal row carries a deviation pair bounded afterwards by `tol`.
  constexpr double kDeviationWeight = 1e3;
  const int cols = static_cast<int>(columns.size());
  const int vars = cols + 2 * mg.rows;
  LinearProgram<double> lp;
  lp.A = Eigen::MatrixXd::Zero(mg.rows + 1, vars);
  lp.b = Eigen::VectorXd::Zero(mg.rows + 1);
  lp.sense.assign(mg.rows + 1, Sense::kEqual);
  lp.objective = Eigen::VectorXd::Constant(vars, -kDeviationWeight);
  for (int i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < mg.support[i].size(); ++s) lp.b[mg.row[i][s]] = mg.mass[i][s];
  }
  for (int r = 0; r < mg.rows; ++r) {
    lp.A(r, cols + 2 * r) = 1.0;
    lp.A(r, cols + 2 * r + 1) = -1.0;
  }
  lp.b[mg.rows] = 1.0;
  for (int t = 0; t < cols; ++t) {
    lp.objective[t] = -overflow[t];
    lp.A(mg.rows, t) = 1.0;
    for (int i = 0; i < n; ++i) {
      const auto it = std::find(mg.support[i].begin(), mg.support[i].end(), columns[t][i]);
      lp.A(mg.row[i][it - mg.support[i].begin()], t) = 1.0;
    }
  }
  const auto result = solve_lp(lp);
  if (result.status != LpStatus::kOptimal) throw Error(ErrorCode::kLpFailure, "enumeration LP failed");
  if (result.x.tail(2 * mg.rows).maxCoeff() > tol) {
    throw Error(ErrorCode::kInfeasible, "marginals are not a mixture of allocations within c + kappa");
  }
  return finish(columns, result.x.head(cols));
}

Decomposition decompose_lottery(const Economy& e, const LotteryAllocation& allocation, DecomposeMethod method,
                                double tol) {
  check_marginal_input(e, allocation, tol);
  const int kappa = std::max(0, e.delta() - 1);
  if (method == DecomposeMethod::kEnumeration) return enumerate_decomposition_oracle(e, allocation, kappa, tol);
  if (method == DecomposeMethod::kAuto &&
      joint_support_size(collect_marginals(e, allocation), kAutoEnumerationLimit) <= kAutoEnumerationLimit) {
    return enumerate_decomposition_oracle(e, allocation, kappa, tol);
  }
  Decomposition out = column_generation(e, allocation);
  for (const auto& atom : out) {
    if ((aggregate(e, atom.allocation) - e.capacities).maxCoeff() > kappa) {
      throw Error(ErrorCode::kLpFailure, "rounding produced an atom beyond the slack bound");
    }
  }
  return out;
}

BudgetDistribution conditional_budget(const AgentPreference& agent, const Eigen::VectorXd& prices,
                                      const BudgetDistribution& budget, int index) {
  const DemandProfile profile = demand_profile(agent, prices);
  const DemandSegment* segment = profile.find(index);
  if (segment == nullptr) throw Error(ErrorCode::kZeroMassBundle, "bundle is never demanded at these prices");
  // The affordability slack admits point masses just below a threshold;
  // uniform pieces keep the exact segment endpoints.
  const double lo = segment->lo <= 0.0 ? -1.0 : segment->lo - kCostTol;
  const double hi = std::isinf(segment->hi) ? segment->hi : segment->hi - kCostTol;
  std::vector<BudgetComponent> parts = budget.restricted(lo, hi).components();
  for (auto& c : parts) {
    if (auto* u = std::get_if<UniformInterval>(&c.piece)) {
      u->lo = std::max(u->lo, segment->lo);
      u->hi = std::min(u->hi, segment->hi);
    }
  }
  return BudgetDistribution(std::move(parts));
}

ExPostImplementation build_implementation(const Economy& e, const std::vector<BudgetDistribution>& budgets,
                                          const Eigen::VectorXd& prices, const LotteryAllocation& allocation,
                                          std::uint64_t seed, DecomposeMethod method) {
  if (static_cast<int>(budgets.size()) != e.num_agents()) {
    throw Error(ErrorCode::kInvalidInput, "one budget distribution per agent is required");
  }
  ExPostImplementation impl;
  impl.prices = prices;
  impl.slack_bound = std::max(0, e.delta() - 1);
  const Decomposition decomposition = decompose_lottery(e, allocation, method);
  for (std::size_t t = 0; t < decomposition.size(); ++t) {
    Atom atom{decomposition[t].weight, decomposition[t].allocation, {}};
    for (int i = 0; i < e.num_agents(); ++i) {
      Rng rng(derive_seed(derive_seed(seed, t), static_cast<std::uint64_t>(i)));
      atom.budgets.push_back(conditional_budget(e.agents[i], prices, budgets[i], atom.allocation[i]).sample(rng));
    }
    impl.atoms.push_back(std::move(atom));
  }
  return impl;
}

ExPostDraw sample_expost(const ExPostImplementation& impl, std::uint64_t seed) {
  if (impl.atoms.empty()) throw Error(ErrorCode::kInvalidInput, "implementation has no atoms");
  Rng rng(seed);
  const double u = uniform01(rng);
  double cumulative = 0.0;
  int pick = -1;
  for (std::size_t t = 0; t < impl.atoms.size(); ++t) {
    if (impl.atoms[t].weight <= 0.0) continue;
    pick = static_cast<int>(t);
    cumulative += impl.atoms[t].weight;
    if (u < cumulative) break;
  }
  if (pick < 0) throw Error(ErrorCode::kInvalidInput, "implementation has no positive-weight atom");
  return {pick, impl.atoms[pick].allocation, impl.atoms[pick].budgets};
}

namespace {

bool in_support(const BudgetDistribution& b, double value) {
  constexpr double kSlack = 1e-9;
  for (const auto& c : b.components()) {
    if (c.weight <= 0.0) continue;
    if (const auto* p = std::get_if<PointMass>(&c.piece)) {
      if (std::abs(p->value - value) <= kSlack) return true;
    } else {
      const auto& u = std::get<UniformInterval>(c.piece);
      if (value >= u.lo - kSlack && value <= u.hi + kSlack) return true;
    }
  }
  return false;
}

}  // namespace

std::vector<Violation> check_implementation(const Economy& e, const std::vector<BudgetDistribution>& budgets,
                                            const LotteryAllocation& allocation, const ExPostImplementation& impl,
                                            int kappa, double tol) {
  std::vector<Violation> out;
  auto report = [&](const std::string& kind, const std::string& detail) { out.push_back({kind, detail}); };
  const int n = e.num_agents();
  if (static_cast<int>(budgets.size()) != n || static_cast<int>(allocation.size()) != n) {
    report("shape", "budgets and lotteries must have one entry per agent");
    return out;
  }
  double total = 0.0;
  for (std::size_t t = 0; t < impl.atoms.size(); ++t) {
    const Atom& atom = impl.atoms[t];
    const std::string where = "atom " + std::to_string(t);
    if (atom.weight < 0.0) report("weight", where + " has negative weight");
    total += atom.weight;
    if (static_cast<int>(atom.allocation.size()) != n || static_cast<int>(atom.budgets.size()) != n) {
      report("shape", where + " must assign one bundle and one budget per agent");
      return out;
    }
    for (int i = 0; i < n; ++i) {
      if (atom.allocation[i] < 0 || atom.allocation[i] > e.agents[i].empty_index()) {
        report("shape", where + " assigns agent " + std::to_string(i) + " an unknown bundle");
        return out;
      }
    }
    const Eigen::VectorXi over = aggregate(e, atom.allocation) - e.capacities;
    for (int j = 0; j < e.num_goods(); ++j) {
      if (over[j] > kappa) {
        report("near-feasibility", where + " exceeds capacity of " + e.good_name(j) + " by " + std::to_string(over[j]));
      }
    }
    for (int i = 0; i < n; ++i) {
      const double b = atom.budgets[i];
      if (!in_support(budgets[i], b)) {
        std::ostringstream msg;
        msg << where << " budget " << b << " of agent " << i << " is outside its distribution's support";
        report("budget-support", msg.str());
      }
      if (optimal_index(e.agents[i], impl.prices, b) != atom.allocation[i]) {
        std::ostringstream msg;
        msg << where << " gives agent " << i << " a bundle that is not optimal at budget " << b;
        report("optimality", msg.str());
      }
    }
  }
  if (std::abs(total - 1.0) > tol) report("weight", "atom weights sum to " + std::to_string(total));

  std::vector<WeightedAllocation> flat;
  for (const auto& atom : impl.atoms) flat.push_back({atom.weight, atom.allocation});
  const LotteryAllocation realized = marginals(e, flat);
  for (int i = 0; i < n; ++i) {
    if (allocation[i].size() != realized[i].size()) {
      report("shape", "lottery of agent " + std::to_string(i) + " has the wrong length");
      continue;
    }
    const double gap = (allocation[i] - realized[i]).cwiseAbs().maxCoeff();
    if (gap > tol) {
      std::ostringstream msg;
      msg << "marginal of agent " << i << " differs from its lottery by " << gap;
      report("marginal", msg.str());
    }
    // Pool budgets by demand segment and compare with the random demand.
    const DemandProfile profile = demand_profile(e.agents[i], impl.prices);
    const Lottery demanded = bundle_probabilities(e.agents[i], impl.prices, budgets[i]);
    Lottery pooled = Lottery::Zero(e.agents[i].outcomes());
    for (const auto& atom : impl.atoms) pooled[profile.at(atom.budgets[i]).index] += atom.weight;
    const double segment_gap = (pooled - demanded).cwiseAbs().maxCoeff();
    if (segment_gap > tol) {
      std::ostringstream msg;
      msg << "budgets of agent " << i << " put the wrong mass on some demand segment (off by " << segment_gap
          << ")";
      report("budget-mass", msg.str());
    }
  }
  return out;
}

}  // namespace ceri
