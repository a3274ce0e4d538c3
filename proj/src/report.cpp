#include "ceri/report.hpp"

#include <cmath>

namespace ceri {

Json report_header(const std::vector<std::string>& command, const SolverConfig& solver) {
  Json out = Json::object();
  out["ceri_version"] = CERI_VERSION;
  out["command"] = command;
  out["tolerances"] = Json{{"probability", kProbTol},
                           {"cost", kCostTol},
                           {"clearing", solver.tol_clearing},
                           {"slackness", solver.tol_slackness}};
  return out;
}

Json lotteries_to_json(const Economy& e, const LotteryAllocation& allocation) {
  Json out = Json::array();
  for (int i = 0; i < e.num_agents(); ++i) {
    Json outcomes = Json::array();
    for (int k = 0; k < allocation[i].size(); ++k) {
      if (allocation[i][k] == 0.0) continue;
      outcomes.push_back(Json{{"bundle", format_bundle(e, e.bundle_of(i, k))}, {"prob", allocation[i][k]}});
    }
    out.push_back(Json{{"agent", e.agents[i].name}, {"outcomes", outcomes}});
  }
  return out;
}

Json budgets_to_json(const std::vector<BudgetDistribution>& budgets) {
  Json out = Json::array();
  for (const auto& b : budgets) out.push_back(budget_to_json(b));
  return out;
}

Json atoms_to_json(const Economy& e, const ExPostImplementation& impl) {
  Json out = Json::array();
  for (const auto& atom : impl.atoms) {
    Json bundles = Json::array();
    for (int i = 0; i < e.num_agents(); ++i) bundles.push_back(format_bundle(e, e.bundle_of(i, atom.allocation[i])));
    out.push_back(Json{{"weight", atom.weight}, {"bundles", bundles}, {"budgets", atom.budgets}});
  }
  return out;
}

Json violations_to_json(const std::vector<Violation>& violations) {
  Json out = Json::array();
  for (const auto& v : violations) out.push_back(Json{{"kind", v.kind}, {"detail", v.detail}});
  return out;
}

Json certificate_to_json(const Economy& e, const EfficiencyCertificate& certificate) {
  Json out = Json::object();
  out["verdict"] = certificate.efficient ? "EFFICIENT" : "INEFFICIENT";
  if (certificate.efficient) {
    out["prices"] = prices_to_json(e, certificate.prices);
    return out;
  }
  Json shifts = Json::array();
  for (const auto& s : certificate.shifts) {
    shifts.push_back(Json{{"agent", e.agents[s.agent].name},
                          {"from", format_bundle(e, e.bundle_of(s.agent, s.from))},
                          {"to", format_bundle(e, e.bundle_of(s.agent, s.to))},
                          {"mass", s.mass}});
  }
  out["shifts"] = shifts;
  out["improved"] = lotteries_to_json(e, certificate.improved);
  return out;
}

Json solution_to_json(const Economy& e, const CeriSolution& solution) {
  Json out = Json::object();
  out["status"] = solution.converged() ? "converged" : "not-converged";
  out["iterations"] = solution.iterations;
  out["restart"] = solution.restart;
  out["prices"] = prices_to_json(e, solution.prices.values);
  out["price_cap"] = solution.prices.cap;
  out["residuals"] = prices_to_json(e, solution.residual);
  out["lotteries"] = lotteries_to_json(e, solution.allocation);
  return out;
}

Json outcome_to_json(const Economy& e, const MechanismOutcome& outcome) {
  Json out = Json::object();
  out["mechanism"] = outcome.mechanism;
  out["seed_trail"] = outcome.seed_trail;
  if (outcome.prices.size() > 0) out["prices"] = prices_to_json(e, outcome.prices);
  if (!outcome.budgets.empty()) out["budgets"] = budgets_to_json(outcome.budgets);
  if (!outcome.type_counts.empty()) {
    out["type_counts"] = outcome.type_counts;
    out["grid_point"] = outcome.grid_point;
    out["lambda"] = outcome.lambda;
  }
  if (outcome.solver_iterations > 0) out["solver_iterations"] = outcome.solver_iterations;
  out["lotteries"] = lotteries_to_json(e, outcome.allocation);
  if (outcome.implementation) {
    out["slack_bound"] = outcome.implementation->slack_bound;
    out["atoms"] = atoms_to_json(e, *outcome.implementation);
  }
  return out;
}

std::string render(const Json& report) { return report.dump(2) + "\n"; }

}  // namespace ceri
