#include "ceri/eating.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ceri {

namespace {

constexpr double kEventTol = 1e-12;

double speed_at(const EatingSpeeds& speeds, int agent, double t) {
  if (speeds.empty()) return 1.0;
  const auto& row = speeds[agent];
  const int slots = static_cast<int>(row.size());
  const int slot = std::min(slots - 1, static_cast<int>(std::floor(t * slots + kEventTol)));
  return row[slot];
}

double next_slot_boundary(const EatingSpeeds& speeds, double t) {
  if (speeds.empty()) return 1.0;
  const int slots = static_cast<int>(speeds.front().size());
  const double next = (std::floor(t * slots + kEventTol) + 1.0) / slots;
  return std::min(1.0, next);
}

int best_available(const AgentPreference& agent, const Eigen::VectorXd& remaining) {
  for (int k = 0; k < agent.size(); ++k) {
    bool ok = true;
    for (Eigen::Index j = 0; j < remaining.size() && ok; ++j) {
      if (agent.ranked[k][j] > 0 && remaining[j] <= 0.0) ok = false;
    }
    if (ok) return k;
  }
  return agent.empty_index();
}

void check_speeds(const Economy& e, const EatingSpeeds& speeds) {
  if (speeds.empty()) return;
  if (static_cast<int>(speeds.size()) != e.num_agents()) {
    throw Error(ErrorCode::kInvalidInput, "one speed schedule per agent is required");
  }
  const std::size_t slots = speeds.front().size();
  for (const auto& row : speeds) {
    if (row.empty() || row.size() != slots) throw Error(ErrorCode::kInvalidInput, "speed schedules must share slots");
    double total = 0.0;
    for (double s : row) {
      if (!(s >= 0.0)) throw Error(ErrorCode::kInvalidInput, "speeds must be nonnegative");
      total += s;
    }
    if (std::abs(total / slots - 1.0) > 1e-9) throw Error(ErrorCode::kInvalidInput, "speeds must average one");
  }
}

}  // namespace

void require_unit_demand(const Economy& e) {
  for (const auto& agent : e.agents) {
    for (const auto& x : agent.ranked) {
      if (bundle_size(x) != 1) throw Error(ErrorCode::kNotUnitDemand, "agent " + agent.name + " lists a multi-unit bundle");
    }
  }
}

EatingTrace simultaneous_eating(const Economy& e, const EatingSpeeds& speeds) {
  const auto problems = validate_economy(e);
  if (!problems.empty()) throw Error(ErrorCode::kValidationError, problems.front().detail);
  check_speeds(e, speeds);
  const int n = e.num_agents();
  const int m = e.num_goods();

  EatingTrace trace;
  for (const auto& agent : e.agents) trace.allocation.push_back(Lottery::Zero(agent.outcomes()));
  trace.exhausted_at = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::infinity());
  trace.exhaustion_rank.assign(m, 0);

  Eigen::VectorXd remaining = e.capacities.cast<double>();
  std::vector<int> current(n);
  std::vector<int> open(n, -1);  // index into trace.intervals of each agent's current interval
  for (int i = 0; i < n; ++i) current[i] = best_available(e.agents[i], remaining);

  double t = 0.0;
  int events = 0;
  while (t < 1.0 - kEventTol) {
    Eigen::VectorXd rate = Eigen::VectorXd::Zero(m);
    std::vector<double> speed(n);
    for (int i = 0; i < n; ++i) {
      speed[i] = speed_at(speeds, i, t);
      if (current[i] != e.agents[i].empty_index()) rate += speed[i] * e.agents[i].ranked[current[i]].cast<double>();
    }
    double next = next_slot_boundary(speeds, t);
    for (int j = 0; j < m; ++j) {
      if (rate[j] > 0.0) next = std::min(next, t + remaining[j] / rate[j]);
    }
    const double dt = next - t;
    for (int i = 0; i < n; ++i) {
      const double mass = speed[i] * dt;
      trace.allocation[i][current[i]] += mass;
      if (open[i] >= 0 && trace.intervals[open[i]].outcome == current[i]) {
        trace.intervals[open[i]].end = next;
        trace.intervals[open[i]].mass += mass;
      } else {
        open[i] = static_cast<int>(trace.intervals.size());
        trace.intervals.push_back({i, current[i], t, next, mass});
      }
    }
    remaining -= rate * dt;
    t = next;

    bool exhausted = false;
    for (int j = 0; j < m; ++j) {
      if (trace.exhaustion_rank[j] == 0 && remaining[j] <= kEventTol * std::max(1.0, double(e.capacities[j]))) {
        remaining[j] = 0.0;
        trace.exhausted_at[j] = t;
        trace.exhaustion_rank[j] = events + 1;
        exhausted = true;
      }
    }
    if (exhausted) ++events;
    // Everyone re-chooses against the same post-event supply.
    for (int i = 0; i < n; ++i) current[i] = best_available(e.agents[i], remaining);
  }
  return trace;
}

}  // namespace ceri
