#ifndef CERI_EATING_HPP
#define CERI_EATING_HPP

#include "ceri/core.hpp"

#include <vector>

namespace ceri {

/// Eating speed of each agent on each of S equal slots of [0, 1]. Every row
/// must average one so that each agent eats exactly one unit. Empty means
/// unit speed throughout.
using EatingSpeeds = std::vector<std::vector<double>>;

struct EatingInterval {
  int agent = 0;
  int outcome = 0;
  double start = 0.0;
  double end = 0.0;
  double mass = 0.0;
};

struct EatingTrace {
  LotteryAllocation allocation;
  std::vector<EatingInterval> intervals;
  /// Time each good runs out; infinity if it never does.
  Eigen::VectorXd exhausted_at;
  /// 1 for goods exhausted at the first exhaustion event, 2 at the second,
  /// and so on; 0 for goods never exhausted.
  std::vector<int> exhaustion_rank;
};

/// Bundled simultaneous eating: every agent eats its best bundle whose goods
/// all remain, switching when one runs out, until time 1.
EatingTrace simultaneous_eating(const Economy& e, const EatingSpeeds& speeds = {});

/// Throws kNotUnitDemand unless every acceptable bundle is a single unit.
void require_unit_demand(const Economy& e);

}  // namespace ceri

#endif  // CERI_EATING_HPP
