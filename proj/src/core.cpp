#include "ceri/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ceri {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "INVALID_INPUT";
    case ErrorCode::kPointMassOnThreshold: return "POINT_MASS_ON_THRESHOLD";
    case ErrorCode::kEmptyEconomy: return "EMPTY_ECONOMY";
    case ErrorCode::kNotConverged: return "NOT_CONVERGED";
    case ErrorCode::kInfeasibleMarginals: return "INFEASIBLE_MARGINALS";
    case ErrorCode::kInfeasible: return "INFEASIBLE";
    case ErrorCode::kLpFailure: return "LP_FAILURE";
    case ErrorCode::kTooLarge: return "TOO_LARGE";
    case ErrorCode::kZeroMassBundle: return "ZERO_MASS_BUNDLE";
    case ErrorCode::kUnknownBundle: return "UNKNOWN_BUNDLE";
    case ErrorCode::kNotCertified: return "NOT_CERTIFIED";
    case ErrorCode::kNotUnitDemand: return "NOT_UNIT_DEMAND";
    case ErrorCode::kParseError: return "PARSE_ERROR";
    case ErrorCode::kValidationError: return "VALIDATION_ERROR";
  }
  return "UNKNOWN";
}

std::optional<int> AgentPreference::rank_of(const Bundle& x) const {
  for (int k = 0; k < size(); ++k) {
    if (same_bundle(ranked[k], x)) return k;
  }
  if ((x.array() == 0).all()) return empty_index();
  return std::nullopt;
}

Bundle AgentPreference::bundle_at(int index, int goods) const {
  if (index == empty_index()) return Bundle::Zero(goods);
  return ranked.at(index);
}

bool AgentPreference::operator==(const AgentPreference& other) const {
  if (ranked.size() != other.ranked.size()) return false;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    if (!same_bundle(ranked[k], other.ranked[k])) return false;
  }
  return true;
}

int Economy::delta() const {
  int d = 0;
  for (const auto& agent : agents) {
    for (const auto& x : agent.ranked) d = std::max(d, bundle_size(x));
  }
  return d;
}

std::vector<Violation> validate_economy(const Economy& e) {
  std::vector<Violation> out;
  const int m = e.num_goods();
  if (m < 1) out.push_back({"no goods", "an economy needs at least one good"});
  if (e.num_agents() < 1) out.push_back({"no agents", "an economy needs at least one agent"});
  if (!e.goods.empty() && static_cast<int>(e.goods.size()) != m) {
    out.push_back({"shape", "good names and capacities differ in length"});
  }
  for (int j = 0; j < m; ++j) {
    if (e.capacities[j] <= 0) {
      std::ostringstream msg;
      msg << "good " << j << " has capacity " << e.capacities[j];
      out.push_back({"nonpositive capacity", msg.str()});
    }
  }
  for (int i = 0; i < e.num_agents(); ++i) {
    const auto& agent = e.agents[i];
    for (int k = 0; k < agent.size(); ++k) {
      const Bundle& x = agent.ranked[k];
      std::ostringstream where;
      where << "agent " << i << " bundle " << k;
      if (x.size() != m) {
        out.push_back({"shape", where.str() + " has the wrong number of goods"});
        continue;
      }
      if ((x.array() < 0).any()) out.push_back({"negative count", where.str()});
      if ((x.array() == 0).all()) out.push_back({"empty bundle listed", where.str()});
      if (e.max_bundle_size && bundle_size(x) > *e.max_bundle_size) {
        out.push_back({"oversize bundle", where.str()});
      }
      for (int k2 = 0; k2 < k; ++k2) {
        if (agent.ranked[k2].size() == m && same_bundle(agent.ranked[k2], x)) {
          out.push_back({"duplicate bundle", where.str()});
          break;
        }
      }
    }
  }
  return out;
}

void require_valid(const Economy& e) {
  const auto violations = validate_economy(e);
  if (violations.empty()) return;
  std::ostringstream msg;
  for (std::size_t k = 0; k < violations.size(); ++k) {
    if (k) msg << "; ";
    msg << violations[k].kind << " (" << violations[k].detail << ")";
  }
  throw Error(ErrorCode::kValidationError, msg.str());
}

LotteryAllocation degenerate_allocation(const Economy& e, const Allocation& allocation) {
  LotteryAllocation out;
  out.reserve(e.agents.size());
  for (int i = 0; i < e.num_agents(); ++i) {
    Lottery l = Lottery::Zero(e.agents[i].outcomes());
    l[allocation.at(i)] = 1.0;
    out.push_back(std::move(l));
  }
  return out;
}

std::vector<Violation> validate_allocation(const Economy& e, const LotteryAllocation& allocation) {
  std::vector<Violation> out;
  if (static_cast<int>(allocation.size()) != e.num_agents()) {
    out.push_back({"shape", "allocation has one lottery per agent"});
    return out;
  }
  for (int i = 0; i < e.num_agents(); ++i) {
    const Lottery& l = allocation[i];
    std::ostringstream where;
    where << "agent " << i;
    if (l.size() != e.agents[i].outcomes()) {
      out.push_back({"shape", where.str() + " lottery length mismatch"});
      continue;
    }
    if ((l.array() < -kProbTol).any()) out.push_back({"negative mass", where.str()});
    if (std::abs(l.sum() - 1.0) > kProbTol) out.push_back({"mass", where.str() + " lottery does not sum to 1"});
  }
  return out;
}

Eigen::VectorXd aggregate_expected(const Economy& e, const LotteryAllocation& allocation) {
  Eigen::VectorXd total = Eigen::VectorXd::Zero(e.num_goods());
  for (int i = 0; i < e.num_agents(); ++i) {
    const auto& agent = e.agents[i];
    for (int k = 0; k < agent.size(); ++k) total += allocation[i][k] * agent.ranked[k].cast<double>();
  }
  return total;
}

Eigen::VectorXi aggregate(const Economy& e, const Allocation& allocation) {
  Eigen::VectorXi total = Eigen::VectorXi::Zero(e.num_goods());
  for (int i = 0; i < e.num_agents(); ++i) {
    if (allocation[i] != e.agents[i].empty_index()) total += e.agents[i].ranked[allocation[i]];
  }
  return total;
}

std::string format_bundle(const Economy& e, const Bundle& x) {
  std::ostringstream out;
  out << '{';
  bool first = true;
  for (int j = 0; j < x.size(); ++j) {
    if (x[j] == 0) continue;
    if (!first) out << ',';
    first = false;
    out << (j < static_cast<int>(e.goods.size()) ? e.goods[j] : std::to_string(j));
    if (x[j] != 1) out << ':' << x[j];
  }
  out << '}';
  return out.str();
}

}  // namespace ceri
