#ifndef CERI_SCENARIO_HPP
#define CERI_SCENARIO_HPP

#include "ceri/budget.hpp"
#include "ceri/core.hpp"
#include "ceri/decompose.hpp"
#include "ceri/equilibrium.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ceri {

using Json = nlohmann::ordered_json;

/// One problem found while reading a scenario. `line` and `column` are
/// 1-based; zero when no position is known.
struct ScenarioIssue {
  std::string path;
  int line = 0;
  int column = 0;
  std::string message;
};

class ScenarioError : public Error {
 public:
  ScenarioError(ErrorCode code, std::string source, std::vector<ScenarioIssue> issues);
  const std::vector<ScenarioIssue>& issues() const { return issues_; }
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::vector<ScenarioIssue> issues_;
};

struct SolverOverrides {
  std::optional<double> tol;
  std::optional<int> max_iters;
  std::optional<int> restarts;
  std::optional<double> damping;

  SolverConfig apply(SolverConfig config) const;
  bool empty() const { return !tol && !max_iters && !restarts && !damping; }
};

struct Scenario {
  Economy economy;
  /// One per agent; may be empty when the scenario only carries an allocation.
  std::vector<BudgetDistribution> budgets;
  std::optional<std::uint64_t> seed;
  SolverOverrides solver;
  std::optional<Eigen::VectorXd> prices;
  std::optional<LotteryAllocation> allocation;
  /// Atoms of an ex-post implementation; prices come from `prices`.
  std::optional<std::vector<Atom>> atoms;
};

/// Reads and validates a scenario file. Throws ScenarioError with kParseError
/// for malformed text and kValidationError for well-formed but invalid content.
Scenario parse_scenario(const std::string& path);

/// Same as parse_scenario on in-memory text; `source` names it in errors.
Scenario parse_scenario_text(const std::string& text, const std::string& source = "<text>");

/// Canonical form: fixed key order, budgets collapsed to "identical" when all
/// agents share one distribution.
Json scenario_to_json(const Scenario& s);
std::string emit_scenario(const Scenario& s);

Json budget_to_json(const BudgetDistribution& b);
/// Bundle as {good: count} in good order; the empty bundle is {}.
Json bundle_to_json(const Economy& e, const Bundle& x);
Json prices_to_json(const Economy& e, const Eigen::VectorXd& prices);

/// The scenario's implementation, ready for check_implementation.
ExPostImplementation implementation_of(const Scenario& s);

}  // namespace ceri

#endif  // CERI_SCENARIO_HPP
