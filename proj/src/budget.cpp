#include "ceri/budget.hpp"

#include "ceri/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ceri {

namespace {

double piece_cdf(const BudgetPiece& piece, double t, bool inclusive) {
  if (const auto* point = std::get_if<PointMass>(&piece)) {
    return inclusive ? (point->value <= t ? 1.0 : 0.0) : (point->value < t ? 1.0 : 0.0);
  }
  const auto& u = std::get<UniformInterval>(piece);
  if (t <= u.lo) return 0.0;
  if (t >= u.hi) return 1.0;
  return (t - u.lo) / (u.hi - u.lo);
}

}  // namespace

BudgetDistribution::BudgetDistribution(std::vector<BudgetComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw Error(ErrorCode::kInvalidInput, "budget distribution has no components");
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) {
      throw Error(ErrorCode::kInvalidInput, "budget component weight must be a finite nonnegative number");
    }
    total += c.weight;
    if (const auto* point = std::get_if<PointMass>(&c.piece)) {
      if (!(point->value >= 0.0) || !std::isfinite(point->value)) {
        throw Error(ErrorCode::kInvalidInput, "point-mass budget must be finite and >= 0");
      }
    } else {
      const auto& u = std::get<UniformInterval>(c.piece);
      if (!(u.lo >= 0.0) || !(u.hi > u.lo) || !std::isfinite(u.hi)) {
        std::ostringstream msg;
        msg << "uniform budget needs 0 <= lo < hi, got [" << u.lo << ", " << u.hi << "]";
        throw Error(ErrorCode::kInvalidInput, msg.str());
      }
    }
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << "budget weights sum to " << total << ", expected 1";
    throw Error(ErrorCode::kInvalidInput, msg.str());
  }
}

BudgetDistribution BudgetDistribution::point(double value) {
  return BudgetDistribution({{1.0, PointMass{value}}});
}

BudgetDistribution BudgetDistribution::uniform(double lo, double hi) {
  return BudgetDistribution({{1.0, UniformInterval{lo, hi}}});
}

double BudgetDistribution::cdf(double t) const {
  double f = 0.0;
  for (const auto& c : components_) f += c.weight * piece_cdf(c.piece, t, true);
  return std::min(f, 1.0);
}

double BudgetDistribution::cdf_below(double t) const {
  double f = 0.0;
  for (const auto& c : components_) f += c.weight * piece_cdf(c.piece, t, false);
  return std::min(f, 1.0);
}

bool BudgetDistribution::is_continuous() const {
  return std::none_of(components_.begin(), components_.end(), [](const BudgetComponent& c) {
    return c.weight > 0.0 && std::holds_alternative<PointMass>(c.piece);
  });
}

double BudgetDistribution::min_support() const {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& c : components_) {
    if (c.weight <= 0.0) continue;
    if (const auto* point = std::get_if<PointMass>(&c.piece)) {
      lo = std::min(lo, point->value);
    } else {
      lo = std::min(lo, std::get<UniformInterval>(c.piece).lo);
    }
  }
  return lo;
}

double BudgetDistribution::max_support() const {
  double hi = 0.0;
  for (const auto& c : components_) {
    if (c.weight <= 0.0) continue;
    if (const auto* point = std::get_if<PointMass>(&c.piece)) {
      hi = std::max(hi, point->value);
    } else {
      hi = std::max(hi, std::get<UniformInterval>(c.piece).hi);
    }
  }
  return hi;
}

BudgetDistribution BudgetDistribution::restricted(double lo, double hi) const {
  std::vector<BudgetComponent> kept;
  double total = 0.0;
  for (const auto& c : components_) {
    if (c.weight <= 0.0) continue;
    if (const auto* point = std::get_if<PointMass>(&c.piece)) {
      if (point->value >= lo && point->value < hi) {
        kept.push_back(c);
        total += c.weight;
      }
      continue;
    }
    const auto& u = std::get<UniformInterval>(c.piece);
    const double a = std::max(u.lo, lo);
    const double b = std::min(u.hi, hi);
    if (b <= a) continue;
    const double w = c.weight * (b - a) / (u.hi - u.lo);
    kept.push_back({w, UniformInterval{a, b}});
    total += w;
  }
  if (total <= 0.0) throw Error(ErrorCode::kZeroMassBundle, "conditioning interval carries no budget mass");
  for (auto& c : kept) c.weight /= total;
  // Renormalized weights can drift by an ulp; fold the remainder into the
  // heaviest component so the constructor's 1e-12 check holds.
  double sum = 0.0;
  for (const auto& c : kept) sum += c.weight;
  auto heaviest = std::max_element(kept.begin(), kept.end(),
                                   [](const auto& a, const auto& b) { return a.weight < b.weight; });
  heaviest->weight += 1.0 - sum;
  return BudgetDistribution(std::move(kept));
}

BudgetDistribution BudgetDistribution::scaled(double s) const {
  if (!(s > 0.0)) throw Error(ErrorCode::kInvalidInput, "scale factor must be positive");
  std::vector<BudgetComponent> out = components_;
  for (auto& c : out) {
    if (auto* point = std::get_if<PointMass>(&c.piece)) {
      point->value *= s;
    } else {
      auto& u = std::get<UniformInterval>(c.piece);
      u.lo *= s;
      u.hi *= s;
    }
  }
  return BudgetDistribution(std::move(out));
}

double BudgetDistribution::sample(Rng& rng) const {
  double r = uniform01(rng);
  const BudgetComponent* chosen = &components_.back();
  for (const auto& c : components_) {
    if (r < c.weight) {
      chosen = &c;
      break;
    }
    r -= c.weight;
  }
  if (const auto* point = std::get_if<PointMass>(&chosen->piece)) return point->value;
  const auto& u = std::get<UniformInterval>(chosen->piece);
  return u.lo + (u.hi - u.lo) * uniform01(rng);
}

bool BudgetDistribution::operator==(const BudgetDistribution& other) const {
  if (components_.size() != other.components_.size()) return false;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& a = components_[k];
    const auto& b = other.components_[k];
    if (a.weight != b.weight || a.piece.index() != b.piece.index()) return false;
    if (const auto* p = std::get_if<PointMass>(&a.piece)) {
      if (p->value != std::get<PointMass>(b.piece).value) return false;
    } else {
      const auto& u = std::get<UniformInterval>(a.piece);
      const auto& v = std::get<UniformInterval>(b.piece);
      if (u.lo != v.lo || u.hi != v.hi) return false;
    }
  }
  return true;
}

}  // namespace ceri
