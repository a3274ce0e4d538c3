#ifndef CERI_BUDGET_HPP
#define CERI_BUDGET_HPP

#include "ceri/random.hpp"

#include <variant>
#include <vector>

namespace ceri {

struct PointMass {
  double value = 0.0;
};

struct UniformInterval {
  double lo = 0.0;
  double hi = 1.0;
};

using BudgetPiece = std::variant<PointMass, UniformInterval>;

struct BudgetComponent {
  double weight = 1.0;
  BudgetPiece piece;
};

/// Finite mixture of point masses and uniform intervals on [0, inf).
class BudgetDistribution {
 public:
  BudgetDistribution() = default;
  /// Validates weights (sum to one within 1e-12) and supports.
  explicit BudgetDistribution(std::vector<BudgetComponent> components);

  static BudgetDistribution point(double value);
  static BudgetDistribution uniform(double lo, double hi);

  const std::vector<BudgetComponent>& components() const { return components_; }

  /// P(B <= t).
  double cdf(double t) const;
  /// P(B < t).
  double cdf_below(double t) const;
  /// P(lo <= B < hi).
  double mass_between(double lo, double hi) const { return cdf_below(hi) - cdf_below(lo); }

  bool is_continuous() const;
  double min_support() const;
  double max_support() const;

  /// Conditional distribution on [lo, hi); throws kZeroMassBundle when the
  /// interval carries no mass.
  BudgetDistribution restricted(double lo, double hi) const;
  /// Distribution of s * B.
  BudgetDistribution scaled(double s) const;

  double sample(Rng& rng) const;

  bool operator==(const BudgetDistribution& other) const;

 private:
  std::vector<BudgetComponent> components_;
};

}  // namespace ceri

#endif  // CERI_BUDGET_HPP
