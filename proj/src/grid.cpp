#include "ceri/grid.hpp"

#include "ceri/core.hpp"
#include "ceri/parallel.hpp"
#include "ceri/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ceri {

RandomGrid build_grid(long lambda, int tau, std::uint64_t seed) {
  if (lambda < 1) throw Error(ErrorCode::kInvalidInput, "grid step must be at least 1");
  if (tau < 0) throw Error(ErrorCode::kInvalidInput, "grid dimension must be nonnegative");
  RandomGrid grid{lambda, tau, {}, seed};
  Rng rng(seed);
  for (int t = 0; t < tau; ++t) {
    grid.offsets.push_back(1 + static_cast<long>(uniform_below(rng, static_cast<std::uint64_t>(lambda))));
  }
  return grid;
}

long round_up_coordinate(long lambda, long offset, long count) {
  if (count <= 0) return 0;
  if (count <= offset) return offset;
  return offset + (count - offset + lambda - 1) / lambda * lambda;
}

std::vector<long> round_up(const RandomGrid& grid, const std::vector<long>& counts) {
  if (static_cast<int>(counts.size()) != grid.tau) {
    throw Error(ErrorCode::kInvalidInput, "type counts must match the grid dimension");
  }
  std::vector<long> out(counts.size());
  for (std::size_t t = 0; t < counts.size(); ++t) out[t] = round_up_coordinate(grid.lambda, grid.offsets[t], counts[t]);
  return out;
}

long nearest_coordinate(long lambda, long offset, long count) {
  const long above = round_up_coordinate(lambda, offset, count);
  long below = 0;
  if (count >= offset) below = offset + (count - offset) / lambda * lambda;
  return count - below <= above - count ? below : above;
}

NearHitStats near_hit_stats(long lambda, int tau, long count, long trials, std::uint64_t seed) {
  if (trials < 1) throw Error(ErrorCode::kInvalidInput, "trials must be positive");
  NearHitStats stats{lambda, count, trials, std::vector<double>(tau, 0.0), std::min(1.0, 3.0 / lambda)};
  std::vector<std::vector<char>> hit(trials);
  parallel_for(trials, [&](long k) {
    const RandomGrid grid = build_grid(lambda, tau, derive_seed(seed, static_cast<std::uint64_t>(k)));
    hit[k].resize(tau);
    for (int t = 0; t < tau; ++t) {
      hit[k][t] = std::abs(nearest_coordinate(lambda, grid.offsets[t], count) - count) <= 1;
    }
  });
  for (const auto& h : hit) {
    for (int t = 0; t < tau; ++t) stats.frequency[t] += h[t];
  }
  for (double& f : stats.frequency) f /= static_cast<double>(trials);
  return stats;
}

RoundingStats rounding_stats(const std::vector<double>& type_probabilities, double epsilon, long trials,
                             std::uint64_t seed) {
  if (type_probabilities.empty()) throw Error(ErrorCode::kInvalidInput, "need at least one type");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidInput, "epsilon must be positive");
  if (trials < 1) throw Error(ErrorCode::kInvalidInput, "trials must be positive");
  RoundingStats stats;
  stats.tau = static_cast<int>(type_probabilities.size());
  stats.p_min = *std::min_element(type_probabilities.begin(), type_probabilities.end());
  stats.epsilon = epsilon;
  stats.trials = trials;
  const double threshold = std::pow(8.0 * stats.tau, 2) / std::pow(epsilon * stats.p_min, 2);
  stats.n = static_cast<long>(std::ceil(threshold - 1e-9));
  stats.lambda = std::max(1L, static_cast<long>(std::floor(stats.tau * std::sqrt(static_cast<double>(stats.n)))));
  stats.bound = 1.0 - stats.lambda / (0.5 * stats.p_min * stats.n);

  std::vector<double> cumulative;
  double acc = 0.0;
  for (double p : type_probabilities) cumulative.push_back(acc += p);

  std::vector<double> ratio(trials);
  std::vector<char> event(trials);
  parallel_for(trials, [&](long k) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    const RandomGrid grid = build_grid(stats.lambda, stats.tau, rng());
    std::vector<long> counts(stats.tau, 0);
    for (long a = 0; a < stats.n; ++a) {
      const double u = uniform01(rng) * acc;
      const auto t = std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
      ++counts[std::min<long>(t, stats.tau - 1)];
    }
    const std::vector<long> rounded = round_up(grid, counts);
    double worst = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (int t = 0; t < stats.tau; ++t) {
      if (rounded[t] == 0) continue;
      const double r = static_cast<double>(counts[t]) / static_cast<double>(rounded[t]);
      worst = std::min(worst, r);
      if (counts[t] < stats.bound * rounded[t]) ok = false;
    }
    ratio[k] = std::isinf(worst) ? 1.0 : worst;
    event[k] = ok;
  });
  stats.min_ratio = *std::min_element(ratio.begin(), ratio.end());
  double sum = 0.0;
  long hits = 0;
  for (long k = 0; k < trials; ++k) {
    sum += ratio[k];
    hits += event[k];
  }
  stats.mean_ratio = sum / trials;
  stats.event_frequency = static_cast<double>(hits) / trials;
  return stats;
}

GridStats grid_stats(long lambda, int tau, long trials, std::uint64_t seed) {
  if (tau < 1) throw Error(ErrorCode::kInvalidInput, "grid dimension must be positive");
  GridStats stats;
  stats.near_hit = near_hit_stats(lambda, tau, 10 * lambda + 5, trials, derive_seed(seed, 0));
  stats.rounding = rounding_stats(std::vector<double>(tau, 1.0 / tau), 0.5, trials, derive_seed(seed, 1));
  return stats;
}

}  // namespace ceri
