#include "ceri/verify.hpp"

#include "ceri/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace ceri {

SdResult sd_dominates(const AgentPreference& agent, const Lottery& x, const Lottery& y, double tol) {
  if (x.size() != agent.outcomes() || y.size() != agent.outcomes()) {
    throw Error(ErrorCode::kUnknownBundle, "lottery is not indexed by the agent's acceptable bundles");
  }
  SdResult r{true, false};
  double cx = 0.0;
  double cy = 0.0;
  for (int k = 0; k < agent.outcomes(); ++k) {
    cx += x[k];
    cy += y[k];
    if (cx < cy - tol) r.dominates = false;
    if (cx > cy + tol) r.strict = true;
  }
  r.strict = r.strict && r.dominates;
  return r;
}

LotteryAllocation apply_shifts(const LotteryAllocation& allocation, const std::vector<Shift>& shifts) {
  LotteryAllocation out = allocation;
  for (const auto& s : shifts) {
    out[s.agent][s.from] -= s.mass;
    out[s.agent][s.to] += s.mass;
  }
  return out;
}

namespace {

// One improvement direction: agent moves mass from supported `from` to the
// better `to`.
struct Move {
  int agent;
  int from;
  int to;
  Eigen::VectorXi diff;
};

struct EfficiencyLp {
  std::vector<int> priced;  // goods whose price is free (not under-allocated)
  std::vector<Move> moves;
  Eigen::VectorXd slack;  // capacity minus expected use
};

EfficiencyLp efficiency_lp(const Economy& e, const LotteryAllocation& allocation, const EfficiencyOptions& options) {
  const auto problems = validate_allocation(e, allocation);
  if (!problems.empty()) throw Error(ErrorCode::kInvalidInput, problems.front().detail);
  EfficiencyLp lp;
  lp.slack = e.capacities.cast<double>() - aggregate_expected(e, allocation);
  for (int j = 0; j < e.num_goods(); ++j) {
    if (lp.slack[j] <= options.slack_tol) lp.priced.push_back(j);
  }
  for (int i = 0; i < e.num_agents(); ++i) {
    for (int k = 0; k < e.agents[i].outcomes(); ++k) {
      if (allocation[i][k] <= options.support_tol) continue;
      const Bundle x = e.bundle_of(i, k);
      for (int y = 0; y < k; ++y) lp.moves.push_back({i, k, y, e.bundle_of(i, y) - x});
    }
  }
  return lp;
}

Rational to_rational(int v) { return Rational(v); }

}  // namespace

EfficiencyCertificate is_ordinally_efficient(const Economy& e, const LotteryAllocation& allocation,
                                             const EfficiencyOptions& options) {
  const EfficiencyLp data = efficiency_lp(e, allocation, options);
  const int f = static_cast<int>(data.priced.size());
  EfficiencyCertificate cert;

  // Prices: p >= 0 on priced goods, p.(y - x) >= 1 for every move. Identical
  // rows are merged.
  std::map<std::vector<int>, int> unique_rows;
  std::vector<std::vector<int>> rows;
  for (const auto& mv : data.moves) {
    std::vector<int> row(f);
    for (int a = 0; a < f; ++a) row[a] = mv.diff[data.priced[a]];
    if (unique_rows.emplace(row, static_cast<int>(rows.size())).second) rows.push_back(row);
  }
  bool feasible = true;
  VectorOf<Rational> p = VectorOf<Rational>::Zero(f);
  if (!rows.empty()) {
    LinearProgram<Rational> lp;
    lp.A = MatrixOf<Rational>::Zero(static_cast<int>(rows.size()), f);
    lp.b = VectorOf<Rational>::Ones(static_cast<int>(rows.size()));
    lp.sense.assign(rows.size(), Sense::kGreaterEqual);
    lp.objective = VectorOf<Rational>::Constant(f, Rational(-1));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (int a = 0; a < f; ++a) lp.A(r, a) = to_rational(rows[r][a]);
    }
    const auto result = solve_lp(lp);
    if (result.status == LpStatus::kOptimal) {
      p = result.x;
    } else if (result.status == LpStatus::kInfeasible) {
      feasible = false;
    } else {
      throw Error(ErrorCode::kLpFailure, "price LP did not terminate");
    }
  }

  if (feasible) {
    cert.efficient = true;
    cert.prices = Eigen::VectorXd::Zero(e.num_goods());
    for (int a = 0; a < f; ++a) cert.prices[data.priced[a]] = static_cast<double>(p[a]);
    return cert;
  }

  // Farkas alternative: lambda >= 0 over moves, sum 1, with no net increase in
  // demand for any priced good.
  const int t = static_cast<int>(data.moves.size());
  LinearProgram<Rational> dual;
  dual.A = MatrixOf<Rational>::Zero(f + 1, t);
  dual.b = VectorOf<Rational>::Zero(f + 1);
  dual.sense.assign(f + 1, Sense::kLessEqual);
  dual.sense[f] = Sense::kEqual;
  dual.b[f] = Rational(1);
  dual.objective = VectorOf<Rational>::Zero(t);
  for (int c = 0; c < t; ++c) {
    for (int a = 0; a < f; ++a) dual.A(a, c) = to_rational(data.moves[c].diff[data.priced[a]]);
    dual.A(f, c) = Rational(1);
  }
  const auto lambda = solve_lp(dual);
  if (lambda.status != LpStatus::kOptimal) throw Error(ErrorCode::kLpFailure, "Farkas certificate LP failed");

  // Scale so no bundle gives away more mass than it holds and no
  // under-allocated good is pushed past capacity.
  std::map<std::pair<int, int>, double> outflow;
  Eigen::VectorXd net = Eigen::VectorXd::Zero(e.num_goods());
  for (int c = 0; c < t; ++c) {
    const double l = static_cast<double>(lambda.x[c]);
    if (l <= 0.0) continue;
    outflow[{data.moves[c].agent, data.moves[c].from}] += l;
    net += l * data.moves[c].diff.cast<double>();
  }
  double scale = std::numeric_limits<double>::infinity();
  for (const auto& [key, out] : outflow) scale = std::min(scale, allocation[key.first][key.second] / out);
  for (int j = 0; j < e.num_goods(); ++j) {
    if (net[j] > 0.0) scale = std::min(scale, std::max(0.0, data.slack[j]) / net[j]);
  }
  for (int c = 0; c < t; ++c) {
    const double l = static_cast<double>(lambda.x[c]);
    if (l <= 0.0) continue;
    cert.shifts.push_back({data.moves[c].agent, data.moves[c].from, data.moves[c].to, scale * l});
  }
  cert.improved = apply_shifts(allocation, cert.shifts);
  return cert;
}

std::vector<BudgetDistribution> budgets_from_prices(const Economy& e, const LotteryAllocation& allocation,
                                                    const Eigen::VectorXd& prices,
                                                    const EfficiencyOptions& options) {
  const EfficiencyLp data = efficiency_lp(e, allocation, options);
  if (prices.size() != e.num_goods() || (prices.array() < 0.0).any()) {
    throw Error(ErrorCode::kNotCertified, "prices must be nonnegative with one entry per good");
  }
  for (int j = 0; j < e.num_goods(); ++j) {
    const bool priced = std::find(data.priced.begin(), data.priced.end(), j) != data.priced.end();
    if (!priced && prices[j] > kCostTol) {
      throw Error(ErrorCode::kNotCertified, "under-allocated good " + e.good_name(j) + " has a positive price");
    }
  }
  for (const auto& mv : data.moves) {
    if (prices.dot(mv.diff.cast<double>()) <= kCostTol) {
      std::ostringstream msg;
      msg << "agent " << mv.agent << " could afford a better bundle than one it holds";
      throw Error(ErrorCode::kNotCertified, msg.str());
    }
  }
  std::vector<BudgetDistribution> out;
  for (int i = 0; i < e.num_agents(); ++i) {
    std::map<double, double> mass;
    double total = 0.0;
    for (int k = 0; k < e.agents[i].outcomes(); ++k) {
      if (allocation[i][k] <= options.support_tol) continue;
      mass[bundle_cost(e.bundle_of(i, k), prices)] += allocation[i][k];
      total += allocation[i][k];
    }
    std::vector<BudgetComponent> components;
    for (const auto& [value, w] : mass) components.push_back({w / total, PointMass{value}});
    out.emplace_back(std::move(components));
  }
  return out;
}

namespace {

constexpr long kSearchLimit = 1000000;

// Depth-first search for an allocation within `limit` that every agent weakly
// prefers and some agent strictly prefers.
bool find_dominating(const Economy& e, const Allocation& current, const Eigen::VectorXi& limit, int agent,
                     Eigen::VectorXi& used, bool strict, long& nodes) {
  if (++nodes > kSearchLimit) throw Error(ErrorCode::kTooLarge, "dominance search exceeds 10^6 nodes");
  if (agent == e.num_agents()) return strict;
  for (int k = 0; k <= current[agent]; ++k) {
    const Bundle x = e.bundle_of(agent, k);
    used += x;
    const bool fits = (used.array() <= limit.array()).all();
    if (fits && find_dominating(e, current, limit, agent + 1, used, strict || k < current[agent], nodes)) {
      used -= x;
      return true;
    }
    used -= x;
  }
  return false;
}

}  // namespace

bool is_kappa_expost_efficient(const Economy& e, const Allocation& allocation, int kappa) {
  if (kappa < 0) throw Error(ErrorCode::kInvalidInput, "kappa must be nonnegative");
  if (static_cast<int>(allocation.size()) != e.num_agents()) {
    throw Error(ErrorCode::kInvalidInput, "one bundle per agent is required");
  }
  const Eigen::VectorXi total = aggregate(e, allocation);
  if (((total - e.capacities).array() > kappa).any()) return false;
  // Dominance only gets easier as capacity grows, so the smallest admissible
  // capacity (the allocation's own aggregate) decides the existential.
  Eigen::VectorXi used = Eigen::VectorXi::Zero(e.num_goods());
  long nodes = 0;
  return !find_dominating(e, allocation, total, 0, used, false, nodes);
}

int project_outcome(const Economy& e, int i, int j, int outcome) {
  const auto rank = e.agents[i].rank_of(e.bundle_of(j, outcome));
  return rank ? *rank : e.agents[i].empty_index();
}

std::vector<std::pair<int, int>> envy_pairs(const Economy& e, const LotteryAllocation& allocation, double tol) {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < e.num_agents(); ++i) {
    for (int j = 0; j < e.num_agents(); ++j) {
      if (i == j) continue;
      Lottery seen = Lottery::Zero(e.agents[i].outcomes());
      for (int k = 0; k < allocation[j].size(); ++k) seen[project_outcome(e, i, j, k)] += allocation[j][k];
      if (!sd_dominates(e.agents[i], allocation[i], seen, tol).dominates) out.emplace_back(i, j);
    }
  }
  return out;
}

bool envies_beyond_one(const Economy& e, int i, int own_outcome, int j, int other_outcome) {
  if (own_outcome <= project_outcome(e, i, j, other_outcome)) return false;
  const Bundle other = e.bundle_of(j, other_outcome);
  for (int g = 0; g < e.num_goods(); ++g) {
    if (other[g] == 0) continue;
    Bundle reduced = other;
    reduced[g] -= 1;
    const auto rank = e.agents[i].rank_of(reduced);
    if (!rank || *rank >= own_outcome) return false;
  }
  return true;
}

std::vector<Ef1Failure> ef1_failures(const Economy& e, const ExPostImplementation& impl) {
  std::vector<Ef1Failure> out;
  for (std::size_t t = 0; t < impl.atoms.size(); ++t) {
    const Allocation& a = impl.atoms[t].allocation;
    for (int i = 0; i < e.num_agents(); ++i) {
      for (int j = 0; j < e.num_agents(); ++j) {
        if (i != j && envies_beyond_one(e, i, a[i], j, a[j])) out.push_back({static_cast<int>(t), i, j});
      }
    }
  }
  return out;
}

double l2_excess(const Economy& e, const Allocation& allocation) {
  return (aggregate(e, allocation) - e.capacities).cast<double>().norm();
}

Selection shapley_folkman_select(const Economy& e, const LotteryAllocation& allocation) {
  const auto problems = validate_allocation(e, allocation);
  if (!problems.empty()) throw Error(ErrorCode::kInvalidInput, problems.front().detail);
  const int n = e.num_agents();
  std::vector<std::vector<int>> support(n);
  long combos = 1;
  Selection best;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < allocation[i].size(); ++k) {
      if (allocation[i][k] > kProbTol) support[i].push_back(k);
    }
    combos *= static_cast<long>(support[i].size());
    if (combos > kSearchLimit) throw Error(ErrorCode::kTooLarge, "joint support exceeds 10^6 combinations");
    for (int a : support[i]) {
      for (int b : support[i]) {
        best.diameter = std::max(best.diameter, (e.bundle_of(i, a) - e.bundle_of(i, b)).cast<double>().norm());
      }
    }
  }
  const int m = e.num_goods();
  best.diameter_bound = best.diameter * std::sqrt(static_cast<double>(m)) / 2.0;
  best.size_bound = std::sqrt(e.delta() * m / 2.0);
  best.expected_excess = (aggregate_expected(e, allocation) - e.capacities.cast<double>()).norm();

  best.excess = std::numeric_limits<double>::infinity();
  std::vector<int> digit(n, 0);
  Allocation candidate(n);
  for (;;) {
    for (int i = 0; i < n; ++i) candidate[i] = support[i][digit[i]];
    const double excess = l2_excess(e, candidate);
    if (excess < best.excess) {
      best.excess = excess;
      best.allocation = candidate;
    }
    int i = 0;
    while (i < n && ++digit[i] == static_cast<int>(support[i].size())) digit[i++] = 0;
    if (i == n) break;
  }
  best.within_bound = best.excess <= best.diameter_bound + best.expected_excess + 1e-9;
  return best;
}

}  // namespace ceri
