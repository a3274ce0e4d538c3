#ifndef CERI_TESTS_SUPPORT_HPP
#define CERI_TESTS_SUPPORT_HPP

// Hand-rolled generators and independent oracles shared by the test suites.

#include "ceri/budget.hpp"
#include "ceri/core.hpp"
#include "ceri/demand.hpp"
#include "ceri/random.hpp"
#include "ceri/simplex.hpp"
#include "ceri/verify.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

namespace ceri::testing {

/// Bundle over single-letter goods: "ab" is one unit each of a and b,
/// "" the empty bundle. Repeated letters add units.
inline Bundle bundle_of(const std::string& goods, const std::string& spec) {
  Bundle x = Bundle::Zero(static_cast<int>(goods.size()));
  for (char c : spec) ++x[static_cast<int>(goods.find(c))];
  return x;
}

inline AgentPreference ranking(const std::string& goods, const std::vector<std::string>& bundles,
                               const std::string& name = "") {
  AgentPreference p;
  p.name = name;
  for (const auto& b : bundles) p.ranked.push_back(bundle_of(goods, b));
  return p;
}

inline Economy make_economy(const std::string& goods, const std::vector<int>& capacities,
                            const std::vector<std::vector<std::string>>& preferences) {
  Economy e;
  for (char c : goods) e.goods.emplace_back(1, c);
  e.capacities = Eigen::Map<const Eigen::VectorXi>(capacities.data(), static_cast<Eigen::Index>(capacities.size()));
  for (std::size_t i = 0; i < preferences.size(); ++i) {
    e.agents.push_back(ranking(goods, preferences[i], std::to_string(i + 1)));
  }
  return e;
}

/// Two unit-demand agents ranking a over b, one unit of each good.
inline Economy two_agents_economy() { return make_economy("ab", {1, 1}, {{"a", "b"}, {"a", "b"}}); }

inline BudgetDistribution two_agents_budget() {
  return BudgetDistribution({{0.5, PointMass{1.0}}, {0.5, PointMass{2.0}}});
}

/// Four unit-demand agents: 1, 2 rank a b c d; 3, 4 rank b a d c.
inline Economy four_agents_economy() {
  return make_economy("abcd", {1, 1, 1, 1},
                      {{"a", "b", "c", "d"}, {"a", "b", "c", "d"}, {"b", "a", "d", "c"}, {"b", "a", "d", "c"}});
}

/// Two agents who both want {a, b}; then 1 prefers a and 2 prefers b.
inline Economy complements_economy() { return make_economy("ab", {1, 1}, {{"ab", "a", "b"}, {"ab", "b", "a"}}); }

/// One good with 20 units; two agents who only accept 100 units.
inline Economy large_bundle_economy() {
  Economy e;
  e.goods = {"g"};
  e.capacities = Eigen::VectorXi::Constant(1, 20);
  for (const char* name : {"1", "2"}) {
    AgentPreference p;
    p.name = name;
    p.ranked.push_back(Bundle::Constant(1, 100));
    e.agents.push_back(p);
  }
  return e;
}

struct EconomyShape {
  int max_agents = 6;
  int max_goods = 4;
  int max_delta = 3;
  int max_bundles = 5;
  int max_capacity = 2;
  /// Allow several units of one good inside a bundle.
  bool multi_unit = false;
  /// Force Delta == 1.
  bool unit_demand = false;
};

inline int draw(Rng& rng, int lo, int hi) { return lo + static_cast<int>(uniform_below(rng, hi - lo + 1)); }

inline Bundle random_bundle(Rng& rng, int goods, int size, bool multi_unit) {
  Bundle x = Bundle::Zero(goods);
  if (multi_unit) {
    for (int u = 0; u < size; ++u) ++x[draw(rng, 0, goods - 1)];
    return x;
  }
  std::vector<int> order(goods);
  for (int j = 0; j < goods; ++j) order[j] = j;
  for (int j = goods - 1; j > 0; --j) std::swap(order[j], order[draw(rng, 0, j)]);
  for (int u = 0; u < std::min(size, goods); ++u) x[order[u]] = 1;
  return x;
}

/// Random well-formed economy within `shape`.
inline Economy random_economy(Rng& rng, const EconomyShape& shape = {}) {
  Economy e;
  const int m = draw(rng, 1, shape.max_goods);
  const int n = draw(rng, 1, shape.max_agents);
  const int delta = shape.unit_demand ? 1 : draw(rng, 1, shape.max_delta);
  e.capacities.resize(m);
  for (int j = 0; j < m; ++j) {
    e.goods.push_back(std::string(1, static_cast<char>('a' + j)));
    e.capacities[j] = draw(rng, 1, shape.max_capacity);
  }
  for (int i = 0; i < n; ++i) {
    AgentPreference p;
    p.name = std::to_string(i + 1);
    const int want = draw(rng, 1, shape.max_bundles);
    for (int attempt = 0; attempt < 40 && p.size() < want; ++attempt) {
      const Bundle x = random_bundle(rng, m, draw(rng, 1, delta), shape.multi_unit);
      if (bundle_size(x) > 0 && !p.rank_of(x)) p.ranked.push_back(x);
    }
    e.agents.push_back(std::move(p));
  }
  return e;
}

/// Random mixture of up to three pieces on [0, 4].
inline BudgetDistribution random_budget(Rng& rng, bool continuous = false) {
  const int pieces = draw(rng, 1, 3);
  std::vector<double> w(pieces);
  double total = 0.0;
  for (auto& x : w) total += (x = 0.1 + uniform01(rng));
  std::vector<BudgetComponent> parts;
  for (int k = 0; k < pieces; ++k) {
    const double lo = 4.0 * uniform01(rng);
    if (!continuous && uniform01(rng) < 0.4) {
      parts.push_back({w[k] / total, PointMass{lo}});
    } else {
      parts.push_back({w[k] / total, UniformInterval{lo, lo + 0.05 + uniform01(rng)}});
    }
  }
  // Weights must sum to one within 1e-12; fold rounding into the last piece.
  double head = 0.0;
  for (int k = 0; k + 1 < pieces; ++k) head += parts[k].weight;
  parts.back().weight = 1.0 - head;
  return BudgetDistribution(std::move(parts));
}

/// Empirical lottery from `draws` sampled budgets.
inline Lottery monte_carlo_lottery(const AgentPreference& agent, const Eigen::VectorXd& prices,
                                   const BudgetDistribution& budget, long draws, std::uint64_t seed) {
  Rng rng(seed);
  Lottery out = Lottery::Zero(agent.outcomes());
  for (long d = 0; d < draws; ++d) out[optimal_index(agent, prices, budget.sample(rng))] += 1.0;
  return out / static_cast<double>(draws);
}

/// Brute-force optimal bundle: scan every listed bundle.
inline int brute_force_optimal(const AgentPreference& agent, const Eigen::VectorXd& prices, double budget) {
  for (int k = 0; k < agent.size(); ++k) {
    if (bundle_cost(agent.ranked[k], prices) <= budget + kCostTol) return k;
  }
  return agent.empty_index();
}

// ---------------------------------------------------------------------------
// Exact dominance oracle by vertex enumeration.
//
// Variables q_i(k) for every agent and outcome. Constraints: q >= 0, each
// agent's masses sum to one, expected aggregate within capacity, and every
// cumulative mass from the top at least the original's. Objective: total
// cumulative gain. The original allocation is dominated iff the maximum is
// positive; the maximum of a bounded polytope is attained at a vertex.

/// Exact fraction over 64-bit integers, kept in lowest terms. The oracle's
/// systems are tiny with 0/1 coefficients, so nothing comes near overflow.
struct Fraction {
  long long num = 0;
  long long den = 1;

  Fraction() = default;
  Fraction(long long n, long long d = 1) : num(n), den(d) { normalize(); }
  explicit Fraction(const Rational& r)
      : Fraction(static_cast<long long>(boost::multiprecision::numerator(r)),
                 static_cast<long long>(boost::multiprecision::denominator(r))) {}

  void normalize() {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  friend Fraction operator+(Fraction a, Fraction b) { return {a.num * b.den + b.num * a.den, a.den * b.den}; }
  friend Fraction operator-(Fraction a, Fraction b) { return {a.num * b.den - b.num * a.den, a.den * b.den}; }
  friend Fraction operator*(Fraction a, Fraction b) { return {a.num * b.num, a.den * b.den}; }
  friend Fraction operator/(Fraction a, Fraction b) { return {a.num * b.den, a.den * b.num}; }
  Fraction operator-() const { return {-num, den}; }
  Fraction& operator+=(Fraction b) { return *this = *this + b; }
  Fraction& operator-=(Fraction b) { return *this = *this - b; }
  friend bool operator==(Fraction a, Fraction b) { return a.num == b.num && a.den == b.den; }
  friend bool operator<(Fraction a, Fraction b) {
    return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
  }
  friend bool operator>(Fraction a, Fraction b) { return b < a; }
};

struct Constraint {
  std::vector<Fraction> row;
  Fraction rhs;
  bool equality = false;  ///< otherwise row.q <= rhs
};

/// Solves the square system exactly; false if singular.
inline bool solve_exact(std::vector<std::vector<Fraction>> a, std::vector<Fraction> b, std::vector<Fraction>& x) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t pivot = c;
    while (pivot < n && a[pivot][c].num == 0) ++pivot;
    if (pivot == n) return false;
    std::swap(a[c], a[pivot]);
    std::swap(b[c], b[pivot]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || a[r][c].num == 0) continue;
      const Fraction f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  x.resize(n);
  for (std::size_t r = 0; r < n; ++r) x[r] = b[r] / a[r][r];
  return true;
}

/// True iff some allocation feasible in expectation weakly sd-improves every
/// agent and strictly improves one. Allocation masses are exact rationals.
inline bool brute_force_dominated(const Economy& e, const std::vector<std::vector<Rational>>& allocation) {
  std::vector<int> offset;
  int vars = 0;
  for (const auto& a : e.agents) {
    offset.push_back(vars);
    vars += a.outcomes();
  }
  std::vector<Constraint> cons;
  std::vector<Fraction> objective(vars, Fraction(0));
  for (int v = 0; v < vars; ++v) {
    Constraint c{std::vector<Fraction>(vars, Fraction(0)), Fraction(0), false};
    c.row[v] = Fraction(-1);
    cons.push_back(c);
  }
  for (int i = 0; i < e.num_agents(); ++i) {
    Constraint c{std::vector<Fraction>(vars, Fraction(0)), Fraction(1), true};
    for (int k = 0; k < e.agents[i].outcomes(); ++k) c.row[offset[i] + k] = 1;
    cons.push_back(c);
    // -sum_{k <= z} q_ik <= -sum_{k <= z} x_ik for every proper prefix.
    Fraction prefix = 0;
    for (int z = 0; z < e.agents[i].size(); ++z) {
      prefix += Fraction(allocation[i][z]);
      Constraint d{std::vector<Fraction>(vars, Fraction(0)), -prefix, false};
      for (int k = 0; k <= z; ++k) {
        d.row[offset[i] + k] = -1;
        objective[offset[i] + k] += 1;
      }
      cons.push_back(d);
    }
  }
  for (int j = 0; j < e.num_goods(); ++j) {
    Constraint c{std::vector<Fraction>(vars, Fraction(0)), Fraction(e.capacities[j]), false};
    for (int i = 0; i < e.num_agents(); ++i) {
      for (int k = 0; k < e.agents[i].size(); ++k) c.row[offset[i] + k] = e.agents[i].ranked[k][j];
    }
    cons.push_back(c);
  }
  Fraction base = 0;
  for (int i = 0; i < e.num_agents(); ++i) {
    Fraction prefix = 0;
    for (int z = 0; z < e.agents[i].size(); ++z) base += (prefix += Fraction(allocation[i][z]));
  }

  std::vector<int> equalities;
  std::vector<int> inequalities;
  for (int c = 0; c < static_cast<int>(cons.size()); ++c) (cons[c].equality ? equalities : inequalities).push_back(c);
  const int choose = vars - static_cast<int>(equalities.size());
  std::vector<int> pick(choose);
  for (int k = 0; k < choose; ++k) pick[k] = k;
  const int pool = static_cast<int>(inequalities.size());
  while (true) {
    std::vector<std::vector<Fraction>> a;
    std::vector<Fraction> b;
    for (int c : equalities) {
      a.push_back(cons[c].row);
      b.push_back(cons[c].rhs);
    }
    for (int k : pick) {
      a.push_back(cons[inequalities[k]].row);
      b.push_back(cons[inequalities[k]].rhs);
    }
    std::vector<Fraction> q;
    if (solve_exact(a, b, q)) {
      bool feasible = true;
      for (const auto& c : cons) {
        Fraction lhs = 0;
        for (int v = 0; v < vars; ++v) lhs += c.row[v] * q[v];
        if (c.equality ? lhs != c.rhs : lhs > c.rhs) {
          feasible = false;
          break;
        }
      }
      if (feasible) {
        Fraction value = 0;
        for (int v = 0; v < vars; ++v) value += objective[v] * q[v];
        if (value > base) return true;
      }
    }
    int k = choose - 1;
    while (k >= 0 && pick[k] == pool - choose + k) --k;
    if (k < 0) break;
    ++pick[k];
    for (int r = k + 1; r < choose; ++r) pick[r] = pick[r - 1] + 1;
  }
  return false;
}

/// One member of the exhaustive tiny family: an economy and exact masses.
struct TinyCase {
  Economy economy;
  std::vector<std::vector<Rational>> masses;
};

/// Every composition of `total` quarters into `parts` nonnegative counts.
inline void compositions(int parts, int total, std::vector<int>& prefix, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(prefix.size()) == parts - 1) {
    prefix.push_back(total);
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int k = 0; k <= total; ++k) {
    prefix.push_back(k);
    compositions(parts, total - k, prefix, out);
    prefix.pop_back();
  }
}

/// Two agents, one or two goods of capacity one, at most two acceptable
/// bundles each, and every pair of quarter-grid lotteries that is feasible in
/// expectation.
inline std::vector<TinyCase> tiny_family() {
  std::vector<TinyCase> out;
  for (const std::string goods : {"a", "ab"}) {
    std::vector<std::string> singles;
    for (const std::string b : {"a", "b", "ab"}) {
      if (b.find_first_not_of(goods) == std::string::npos) singles.push_back(b);
    }
    std::vector<std::vector<std::string>> rankings{{}};
    for (const auto& x : singles) {
      rankings.push_back({x});
      for (const auto& y : singles) {
        if (y != x) rankings.push_back({x, y});
      }
    }
    for (const auto& r1 : rankings) {
      for (const auto& r2 : rankings) {
        const Economy e = make_economy(goods, std::vector<int>(goods.size(), 1), {r1, r2});
        std::vector<std::vector<int>> l1, l2;
        std::vector<int> prefix;
        compositions(e.agents[0].outcomes(), 4, prefix, l1);
        compositions(e.agents[1].outcomes(), 4, prefix, l2);
        for (const auto& q1 : l1) {
          for (const auto& q2 : l2) {
            TinyCase c{e, {{}, {}}};
            for (int k : q1) c.masses[0].push_back(Rational(k, 4));
            for (int k : q2) c.masses[1].push_back(Rational(k, 4));
            bool feasible = true;
            for (int j = 0; j < e.num_goods(); ++j) {
              Rational used = 0;
              for (int i = 0; i < 2; ++i) {
                for (int k = 0; k < e.agents[i].size(); ++k) used += c.masses[i][k] * e.agents[i].ranked[k][j];
              }
              feasible = feasible && used <= e.capacities[j];
            }
            if (feasible) out.push_back(std::move(c));
          }
        }
      }
    }
  }
  return out;
}

inline LotteryAllocation to_lotteries(const std::vector<std::vector<Rational>>& masses) {
  LotteryAllocation out;
  for (const auto& m : masses) {
    Lottery l(static_cast<Eigen::Index>(m.size()));
    for (std::size_t k = 0; k < m.size(); ++k) l[static_cast<Eigen::Index>(k)] = static_cast<double>(m[k]);
    out.push_back(l);
  }
  return out;
}

}  // namespace ceri::testing

#endif  // CERI_TESTS_SUPPORT_HPP
