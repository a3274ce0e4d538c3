#include "ceri/mechanisms.hpp"

#include "ceri/demand.hpp"
#include "ceri/parallel.hpp"
#include "ceri/random.hpp"
#include "ceri/simplex.hpp"
#include "ceri/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace ceri {

MechanismOutcome ceri_s(const Economy& e, double epsilon, std::uint64_t seed, const SolverConfig& config) {
  require_valid(e);
  if (!(epsilon > 0.0 && epsilon < 1.0 / e.num_goods())) {
    throw Error(ErrorCode::kInvalidInput, "epsilon must lie in (0, 1/m)");
  }
  MechanismOutcome out;
  out.mechanism = "ceri-s";
  out.budgets.assign(e.num_agents(), BudgetDistribution::uniform(1.0, 1.0 + epsilon));
  SolverConfig cfg = config;
  cfg.seed = derive_seed(seed, 0);
  out.seed_trail = {seed, cfg.seed, derive_seed(seed, 1)};
  CeriSolution solution = solve_ceri(e, out.budgets, cfg);
  if (!solution.converged()) throw NotConverged(std::move(solution));
  out.prices = solution.prices.values;
  out.allocation = solution.allocation;
  out.solver_iterations = solution.iterations;
  out.implementation = build_implementation(e, out.budgets, out.prices, out.allocation, out.seed_trail[2]);
  return out;
}

TypeCensus census(const Economy& e, const std::vector<AgentPreference>& universe) {
  TypeCensus c;
  c.types = universe;
  c.counts.assign(universe.size(), 0);
  for (const auto& agent : e.agents) {
    const auto it = std::find(c.types.begin(), c.types.end(), agent);
    int t = static_cast<int>(it - c.types.begin());
    if (it == c.types.end()) {
      if (!universe.empty()) throw Error(ErrorCode::kInvalidInput, "reported type is outside the type universe");
      c.types.push_back(agent);
      c.counts.push_back(0);
    }
    ++c.counts[t];
    c.agent_type.push_back(t);
  }
  return c;
}

BudgetDistribution ceri_l_budget(int delta) {
  if (delta <= 1) return BudgetDistribution::uniform(1.0, 2.0);
  return BudgetDistribution::uniform(1.0, static_cast<double>(delta) / (delta - 1));
}

MechanismOutcome ceri_l(const Economy& e, std::uint64_t seed, const CeriLOptions& options) {
  require_valid(e);
  const TypeCensus types = census(e, options.universe);
  const int tau = static_cast<int>(types.types.size());
  const int n = e.num_agents();
  MechanismOutcome out;
  out.mechanism = "ceri-l";
  out.type_counts = types.counts;
  out.lambda = options.lambda > 0 ? options.lambda
                                  : std::max(1L, static_cast<long>(std::floor(tau * std::sqrt(static_cast<double>(n)))));
  out.seed_trail = {seed, derive_seed(seed, 0), derive_seed(seed, 1), derive_seed(seed, 2)};
  const RandomGrid grid = build_grid(out.lambda, tau, out.seed_trail[1]);
  out.grid_point = round_up(grid, types.counts);

  // The phantom economy: one weighted agent per type present on the grid.
  Economy phantom;
  phantom.goods = e.goods;
  phantom.capacities = e.capacities;
  AgentWeights weights;
  int delta = 0;
  for (int t = 0; t < tau; ++t) {
    for (const auto& x : types.types[t].ranked) delta = std::max(delta, bundle_size(x));
    if (out.grid_point[t] == 0) continue;
    phantom.agents.push_back(types.types[t]);
    weights.push_back(static_cast<double>(out.grid_point[t]));
  }
  const BudgetDistribution budget = ceri_l_budget(delta);
  SolverConfig cfg = options.solver;
  cfg.seed = out.seed_trail[2];
  CeriSolution solution =
      solve_ceri(phantom, std::vector<BudgetDistribution>(phantom.agents.size(), budget), cfg, weights);
  if (!solution.converged()) throw NotConverged(std::move(solution));
  out.prices = solution.prices.values;
  out.solver_iterations = solution.iterations;
  out.budgets.assign(n, budget);
  for (const auto& agent : e.agents) out.allocation.push_back(bundle_probabilities(agent, out.prices, budget));
  if (options.implement) {
    // Real agents only: their expected use is dominated by the phantom economy's.
    out.implementation = build_implementation(e, out.budgets, out.prices, out.allocation, derive_seed(seed, 3));
    out.seed_trail.push_back(derive_seed(seed, 3));
  }
  return out;
}

Allocation serial_dictatorship(const Economy& e, const std::vector<int>& order) {
  require_valid(e);
  std::vector<int> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expected(e.num_agents());
  std::iota(expected.begin(), expected.end(), 0);
  if (sorted != expected) throw Error(ErrorCode::kInvalidInput, "order must be a permutation of the agents");
  Eigen::VectorXi remaining = e.capacities;
  Allocation out(e.num_agents());
  for (int i : order) {
    const auto& agent = e.agents[i];
    out[i] = agent.empty_index();
    for (int k = 0; k < agent.size(); ++k) {
      if ((agent.ranked[k].array() <= remaining.array()).all()) {
        out[i] = k;
        remaining -= agent.ranked[k];
        break;
      }
    }
  }
  return out;
}

namespace {

/// Prices maximizing the margin by which every bundle an agent ranks above
/// its own exceeds that agent's budget, subject to affording its own bundle
/// and zero prices on goods with units left over. Empty when no margin is
/// positive.
std::optional<Eigen::VectorXd> margin_prices(const Economy& e, const std::vector<int>& order,
                                             const Allocation& allocation, const Eigen::VectorXi& used) {
  const int m = e.num_goods();
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  std::vector<Sense> sense;
  auto add = [&](const Bundle& x, double margin, double b, Sense s) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(m + 1);
    r.head(m) = x.cast<double>();
    r[m] = margin;
    rows.push_back(r);
    rhs.push_back(b);
    sense.push_back(s);
  };
  for (std::size_t k = 0; k < order.size(); ++k) {
    const int i = order[k];
    const AgentPreference& agent = e.agents[i];
    const double budget = 1.0 / static_cast<double>(k + 1);
    const int own = allocation[i];
    if (own < agent.size()) add(agent.ranked[own], 0.0, budget, Sense::kLessEqual);
    for (int z = 0; z < std::min(own, agent.size()); ++z) add(agent.ranked[z], -1.0, budget, Sense::kGreaterEqual);
  }
  for (int j = 0; j < m; ++j) {
    if (used[j] < e.capacities[j]) add(Bundle::Unit(m, j), 0.0, 0.0, Sense::kEqual);
  }
  add(Bundle::Zero(m), 1.0, 1.0, Sense::kLessEqual);
  LinearProgram<double> lp;
  lp.A.resize(static_cast<Eigen::Index>(rows.size()), m + 1);
  lp.b.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    lp.A.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    lp.b[static_cast<Eigen::Index>(r)] = rhs[r];
  }
  lp.sense = std::move(sense);
  lp.objective = Eigen::VectorXd::Unit(m + 1, m);
  const LpResult<double> result = solve_lp(lp);
  if (result.status != LpStatus::kOptimal || result.objective <= 1e-9) return std::nullopt;
  return Eigen::VectorXd(result.x.head(m).cwiseMax(0.0));
}

}  // namespace

CeriForm sd_to_ceri(const Economy& e, const std::vector<int>& order, const Allocation& allocation) {
  require_valid(e);
  if (order.size() != allocation.size() || static_cast<int>(order.size()) != e.num_agents()) {
    throw Error(ErrorCode::kInvalidInput, "order and allocation must cover every agent");
  }
  CeriForm form;
  form.budgets.resize(e.num_agents());
  const Eigen::VectorXi used = aggregate(e, allocation);
  form.prices = Eigen::VectorXd::Zero(e.num_goods());
  Eigen::VectorXd best = Eigen::VectorXd::Constant(e.num_goods(), std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const int i = order[k];
    const double budget = 1.0 / static_cast<double>(k + 1);
    form.budgets[i] = BudgetDistribution::point(budget);
    const Bundle x = e.bundle_of(i, allocation[i]);
    const int size = bundle_size(x);
    if (size == 0) continue;
    for (int j = 0; j < e.num_goods(); ++j) {
      if (x[j] > 0) best[j] = std::min(best[j], budget / size);
    }
  }
  for (int j = 0; j < e.num_goods(); ++j) {
    if (used[j] >= e.capacities[j] && std::isfinite(best[j])) form.prices[j] = best[j];
  }
  // Even splitting can misprice multi-unit bundles; fall back to the
  // max-margin prices when they exist.
  if (!verify_ceri(e, form.budgets, form.prices, degenerate_allocation(e, allocation)).is_ceri) {
    if (auto prices = margin_prices(e, order, allocation, used)) form.prices = std::move(*prices);
  }
  return form;
}

LotteryAllocationOf<Rational> rsd_exact(const Economy& e) {
  require_valid(e);
  const int n = e.num_agents();
  if (n > 9) throw Error(ErrorCode::kTooLarge, "exact enumeration needs n <= 9");
  std::vector<std::vector<long>> counts(n);
  for (int i = 0; i < n; ++i) counts[i].assign(e.agents[i].outcomes(), 0);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  long orders = 0;
  do {
    const Allocation a = serial_dictatorship(e, order);
    for (int i = 0; i < n; ++i) ++counts[i][a[i]];
    ++orders;
  } while (std::next_permutation(order.begin(), order.end()));
  LotteryAllocationOf<Rational> out(n);
  for (int i = 0; i < n; ++i) {
    out[i] = LotteryOf<Rational>(e.agents[i].outcomes());
    for (int k = 0; k < e.agents[i].outcomes(); ++k) out[i][k] = Rational(counts[i][k], orders);
  }
  return out;
}

LotteryAllocation rsd(const Economy& e, std::uint64_t seed) {
  if (e.num_agents() <= 9) return to_double(rsd_exact(e));
  constexpr long kDraws = 100000;
  const int n = e.num_agents();
  LotteryAllocation out;
  for (const auto& agent : e.agents) out.push_back(Lottery::Zero(agent.outcomes()));
  Rng rng(seed);
  std::vector<int> order(n);
  for (long d = 0; d < kDraws; ++d) {
    std::iota(order.begin(), order.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(order[i], order[uniform_below(rng, static_cast<std::uint64_t>(i + 1))]);
    const Allocation a = serial_dictatorship(e, order);
    for (int i = 0; i < n; ++i) out[i][a[i]] += 1.0 / kDraws;
  }
  return out;
}

EatingTrace ps(const Economy& e) {
  require_unit_demand(e);
  return simultaneous_eating(e);
}

CeriForm ps_to_ceri(const Economy& e, const EatingTrace& trace) {
  require_unit_demand(e);
  CeriForm form;
  form.prices = Eigen::VectorXd::Zero(e.num_goods());
  for (int j = 0; j < e.num_goods(); ++j) {
    if (std::isfinite(trace.exhausted_at[j])) form.prices[j] = std::max(0.0, 1.0 - trace.exhausted_at[j]);
  }
  form.budgets.assign(e.num_agents(), BudgetDistribution::uniform(0.0, 1.0));
  return form;
}

EatingTrace bps(const Economy& e, const EatingSpeeds& speeds) { return simultaneous_eating(e, speeds); }

CeriForm bps_to_ceri(const Economy& e, const EatingTrace& trace) {
  require_valid(e);
  const double base = static_cast<double>(e.delta() + 1);
  CeriForm form;
  form.prices = Eigen::VectorXd::Zero(e.num_goods());
  for (int j = 0; j < e.num_goods(); ++j) {
    if (trace.exhaustion_rank[j] > 0) form.prices[j] = std::pow(base, -trace.exhaustion_rank[j]);
  }
  std::vector<std::vector<BudgetComponent>> pieces(e.num_agents());
  std::vector<double> total(e.num_agents(), 0.0);
  for (const auto& interval : trace.intervals) {
    if (interval.mass <= 1e-15) continue;
    const DemandProfile profile = demand_profile(e.agents[interval.agent], form.prices);
    const DemandSegment* segment = profile.find(interval.outcome);
    if (segment == nullptr) {
      throw Error(ErrorCode::kNotCertified, "an eaten bundle is never demanded at the derived prices");
    }
    const double hi = std::isinf(segment->hi) ? segment->lo + 1.0 : segment->hi;
    pieces[interval.agent].push_back({interval.mass, UniformInterval{segment->lo, hi}});
    total[interval.agent] += interval.mass;
  }
  for (int i = 0; i < e.num_agents(); ++i) {
    for (auto& c : pieces[i]) c.weight /= total[i];
    form.budgets.emplace_back(std::move(pieces[i]));
  }
  return form;
}

namespace {

Lottery seen_by(const AgentPreference& truth, const AgentPreference& report, const Lottery& lottery, int goods) {
  Lottery out = Lottery::Zero(truth.outcomes());
  for (int k = 0; k < report.outcomes(); ++k) {
    const auto rank = truth.rank_of(report.bundle_at(k, goods));
    out[rank ? *rank : truth.empty_index()] += lottery[k];
  }
  return out;
}

}  // namespace

SpProbeReport sp_probe(const Economy& e, const LotteryMechanism& mechanism,
                       const std::vector<std::vector<AgentPreference>>& misreports, long samples, std::uint64_t seed,
                       const SpProbeOptions& options) {
  require_valid(e);
  if (static_cast<int>(misreports.size()) != e.num_agents()) {
    throw Error(ErrorCode::kInvalidInput, "one misreport list per agent is required");
  }
  if (samples < 1) throw Error(ErrorCode::kInvalidInput, "samples must be positive");
  std::vector<int> probed;
  for (int i = 0; i < e.num_agents(); ++i) {
    bool duplicate = false;
    for (int j : probed) {
      if (options.anonymous && e.agents[j] == e.agents[i] && misreports[j] == misreports[i]) duplicate = true;
    }
    if (!duplicate) probed.push_back(i);
  }

  // 1 truthful, 0 not, -1 solver failure.
  std::vector<int> verdict(samples, 1);
  parallel_for(samples, [&](long s) {
    const std::uint64_t omega = derive_seed(seed, static_cast<std::uint64_t>(s));
    try {
      const LotteryAllocation truth = mechanism(e, omega);
      for (int i : probed) {
        for (const auto& report : misreports[i]) {
          if (report == e.agents[i]) continue;
          Economy deviated = e;
          deviated.agents[i] = report;
          deviated.agents[i].name = e.agents[i].name;
          const LotteryAllocation lie = mechanism(deviated, omega);
          const Lottery seen = seen_by(e.agents[i], report, lie[i], e.num_goods());
          if (!sd_dominates(e.agents[i], truth[i], seen, options.tol).dominates) {
            verdict[s] = 0;
            return;
          }
        }
      }
    } catch (const Error& err) {
      if (err.code() != ErrorCode::kNotConverged) throw;
      verdict[s] = -1;
    }
  });

  SpProbeReport report;
  report.samples = samples;
  for (int v : verdict) {
    if (v < 0) {
      ++report.solver_failures;
    } else {
      report.truthful.push_back(v == 1);
    }
  }
  const double usable = static_cast<double>(report.truthful.size());
  if (usable > 0) {
    report.probability = std::count(report.truthful.begin(), report.truthful.end(), true) / usable;
    report.std_error = std::sqrt(report.probability * (1.0 - report.probability) / usable);
  }
  return report;
}

std::vector<AgentPreference> unit_demand_rankings(int goods, bool full_only) {
  std::vector<AgentPreference> out;
  std::vector<int> prefix;
  std::vector<bool> used(goods, false);
  std::function<void()> extend = [&] {
    if (!full_only || static_cast<int>(prefix.size()) == goods) {
      AgentPreference p;
      for (int j : prefix) {
        Bundle x = Bundle::Zero(goods);
        x[j] = 1;
        p.ranked.push_back(x);
      }
      out.push_back(std::move(p));
    }
    for (int j = 0; j < goods; ++j) {
      if (used[j]) continue;
      used[j] = true;
      prefix.push_back(j);
      extend();
      prefix.pop_back();
      used[j] = false;
    }
  };
  extend();
  return out;
}

}  // namespace ceri
