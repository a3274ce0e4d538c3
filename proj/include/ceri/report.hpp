#ifndef CERI_REPORT_HPP
#define CERI_REPORT_HPP

#include "ceri/decompose.hpp"
#include "ceri/equilibrium.hpp"
#include "ceri/mechanisms.hpp"
#include "ceri/scenario.hpp"
#include "ceri/verify.hpp"

#include <string>
#include <vector>

namespace ceri {

/// Version, command echo and the tolerance configuration every report opens with.
Json report_header(const std::vector<std::string>& command, const SolverConfig& solver);

/// Per agent: name and the nonzero outcomes as {bundle, prob}.
Json lotteries_to_json(const Economy& e, const LotteryAllocation& allocation);
Json budgets_to_json(const std::vector<BudgetDistribution>& budgets);
Json atoms_to_json(const Economy& e, const ExPostImplementation& impl);
Json violations_to_json(const std::vector<Violation>& violations);
Json certificate_to_json(const Economy& e, const EfficiencyCertificate& certificate);
Json solution_to_json(const Economy& e, const CeriSolution& solution);
Json outcome_to_json(const Economy& e, const MechanismOutcome& outcome);

/// Stable text form: two-space indent, trailing newline.
std::string render(const Json& report);

}  // namespace ceri

#endif  // CERI_REPORT_HPP
