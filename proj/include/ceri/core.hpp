#ifndef CERI_CORE_HPP
#define CERI_CORE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ceri {

/// Equality tolerance for probabilities and expected quantities.
inline constexpr double kProbTol = 1e-9;
/// Tolerance used when comparing bundle costs against budgets.
inline constexpr double kCostTol = 1e-12;

enum class ErrorCode {
  kInvalidInput,
  kPointMassOnThreshold,
  kEmptyEconomy,
  kNotConverged,
  kInfeasibleMarginals,
  kInfeasible,
  kLpFailure,
  kTooLarge,
  kZeroMassBundle,
  kUnknownBundle,
  kNotCertified,
  kNotUnitDemand,
  kParseError,
  kValidationError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Integral count per good.
using Bundle = Eigen::VectorXi;

inline int bundle_size(const Bundle& x) { return x.sum(); }

inline bool same_bundle(const Bundle& x, const Bundle& y) {
  return x.size() == y.size() && (x.array() == y.array()).all();
}

inline double bundle_cost(const Bundle& x, const Eigen::VectorXd& prices) {
  return prices.dot(x.cast<double>());
}

/// Strict ranking over an agent's acceptable bundles. The empty bundle is
/// implicitly ranked last and lives at index `empty_index()` in every
/// per-agent vector (lotteries, masses, demand segments).
struct AgentPreference {
  std::string name;
  std::vector<Bundle> ranked;

  int size() const { return static_cast<int>(ranked.size()); }
  int empty_index() const { return size(); }
  int outcomes() const { return size() + 1; }

  /// Index of `x` in the ranking, `empty_index()` for the empty bundle,
  /// nullopt when `x` is not acceptable.
  std::optional<int> rank_of(const Bundle& x) const;

  /// Bundle at a ranking index; `empty_index()` maps to the zero vector.
  Bundle bundle_at(int index, int goods) const;

  bool operator==(const AgentPreference& other) const;
};

struct Economy {
  std::vector<std::string> goods;
  Eigen::VectorXi capacities;
  std::vector<AgentPreference> agents;
  /// Optional declared bound on bundle size; bundles above it are flagged.
  std::optional<int> max_bundle_size;

  int num_goods() const { return static_cast<int>(capacities.size()); }
  int num_agents() const { return static_cast<int>(agents.size()); }
  /// Largest acceptable bundle size over all agents (0 if nobody lists a bundle).
  int delta() const;

  Bundle bundle_of(int agent, int index) const { return agents[agent].bundle_at(index, num_goods()); }
  /// Name of good j, or its index when goods are unnamed.
  std::string good_name(int j) const {
    return j < static_cast<int>(goods.size()) ? goods[j] : std::to_string(j);
  }
};

struct Violation {
  std::string kind;
  std::string detail;
};

/// Every well-formedness problem of `e`; empty when valid.
std::vector<Violation> validate_economy(const Economy& e);

/// Throws kValidationError listing all violations.
void require_valid(const Economy& e);

/// Lottery over one agent's outcomes, indexed like AgentPreference (last entry
/// is the empty bundle).
template <typename Scalar>
using LotteryOf = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using LotteryAllocationOf = std::vector<LotteryOf<Scalar>>;

using Lottery = LotteryOf<double>;
using LotteryAllocation = LotteryAllocationOf<double>;

/// A deterministic allocation: one ranking index per agent.
using Allocation = std::vector<int>;

template <typename Scalar>
LotteryAllocation to_double(const LotteryAllocationOf<Scalar>& allocation) {
  LotteryAllocation out;
  out.reserve(allocation.size());
  for (const auto& lottery : allocation) {
    Lottery l(lottery.size());
    for (Eigen::Index k = 0; k < lottery.size(); ++k) l[k] = static_cast<double>(lottery[k]);
    out.push_back(std::move(l));
  }
  return out;
}

/// Point-mass lottery allocation for a deterministic allocation.
LotteryAllocation degenerate_allocation(const Economy& e, const Allocation& allocation);

/// Validates shape, nonnegativity and unit mass of every lottery.
std::vector<Violation> validate_allocation(const Economy& e, const LotteryAllocation& allocation);

/// Sum of expected bundles, per good.
Eigen::VectorXd aggregate_expected(const Economy& e, const LotteryAllocation& allocation);

/// Sum of bundles of a deterministic allocation.
Eigen::VectorXi aggregate(const Economy& e, const Allocation& allocation);

/// Human-readable bundle, e.g. {a,b} or {a:2}.
std::string format_bundle(const Economy& e, const Bundle& x);

}  // namespace ceri

#endif  // CERI_CORE_HPP
