#ifndef CERI_GRID_HPP
#define CERI_GRID_HPP

#include <cstdint>
#include <vector>

namespace ceri {

/// Coordinate t of the grid is {0, z_t, z_t + lambda, z_t + 2 lambda, ...}
/// with offsets z_t drawn uniformly from {1, ..., lambda}.
struct RandomGrid {
  long lambda = 1;
  int tau = 0;
  std::vector<long> offsets;
  std::uint64_t seed = 0;
};

RandomGrid build_grid(long lambda, int tau, std::uint64_t seed);

/// Smallest grid coordinate at or above `count`.
long round_up_coordinate(long lambda, long offset, long count);

/// Minimal grid point coordinate-wise at least `counts`.
std::vector<long> round_up(const RandomGrid& grid, const std::vector<long>& counts);

/// Grid coordinate nearest to `count` (ties toward the lower one).
long nearest_coordinate(long lambda, long offset, long count);

struct NearHitStats {
  long lambda = 0;
  long count = 0;
  long trials = 0;
  /// Fraction of grids whose nearest coordinate lies within 1 of `count`,
  /// one entry per coordinate.
  std::vector<double> frequency;
  /// min(1, 3 / lambda).
  double theory = 0.0;
};

/// Per-coordinate frequency of |psi - u| <= 1 over random grids at fixed psi.
NearHitStats near_hit_stats(long lambda, int tau, long count, long trials, std::uint64_t seed);

struct RoundingStats {
  int tau = 0;
  double p_min = 0.0;
  double epsilon = 0.0;
  /// Market size: the threshold (8 tau)^2 / (epsilon p_min)^2, rounded up.
  long n = 0;
  /// floor(tau sqrt(n)).
  long lambda = 0;
  long trials = 0;
  /// 1 - lambda / (0.5 p_min n).
  double bound = 0.0;
  /// Fraction of trials with psi >= bound * round_up(psi) in every coordinate.
  double event_frequency = 0.0;
  double min_ratio = 0.0;
  double mean_ratio = 0.0;
};

/// Draws type counts from a multinomial over `type_probabilities` and checks
/// the rounding-ratio event against its bound.
RoundingStats rounding_stats(const std::vector<double>& type_probabilities, double epsilon, long trials,
                             std::uint64_t seed);

struct GridStats {
  NearHitStats near_hit;
  RoundingStats rounding;
};

/// Near-hit statistics at psi = 10 lambda + 5 and rounding statistics for
/// tau equally likely types at epsilon = 1/2.
GridStats grid_stats(long lambda, int tau, long trials, std::uint64_t seed);

}  // namespace ceri

#endif  // CERI_GRID_HPP
