#ifndef CERI_SIMPLEX_HPP
#define CERI_SIMPLEX_HPP

// Dense two-phase tableau simplex templated on the scalar type. Instantiated
// with double for the decomposition machinery and with an exact rational type
// for certificates, where Bland's rule guarantees termination.

#include <Eigen/Dense>

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/eigen.hpp>

#include <vector>

namespace ceri {

using Rational = boost::multiprecision::cpp_rational;

template <typename Scalar>
using VectorOf = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixOf = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class Sense { kLessEqual, kGreaterEqual, kEqual };

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

/// maximize objective.x  s.t.  A x (sense) b,  x >= 0.
template <typename Scalar>
struct LinearProgram {
  MatrixOf<Scalar> A;
  VectorOf<Scalar> b;
  std::vector<Sense> sense;
  VectorOf<Scalar> objective;
};

template <typename Scalar>
struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  VectorOf<Scalar> x;
  /// Dual price per constraint row (y with A^T y >= c for a maximization
  /// over <= rows).
  VectorOf<Scalar> duals;
  Scalar objective{0};
};

template <typename Scalar>
struct SimplexTolerance {
  static Scalar pivot() { return Scalar(0); }
  static Scalar feasibility() { return Scalar(0); }
};

template <>
struct SimplexTolerance<double> {
  static double pivot() { return 1e-11; }
  static double feasibility() { return 1e-9; }
};

namespace detail {

template <typename Scalar>
class Tableau {
 public:
  Tableau(MatrixOf<Scalar> body, VectorOf<Scalar> rhs, std::vector<int> basis)
      : body_(std::move(body)), rhs_(std::move(rhs)), basis_(std::move(basis)) {}

  int rows() const { return static_cast<int>(body_.rows()); }
  int cols() const { return static_cast<int>(body_.cols()); }
  const MatrixOf<Scalar>& body() const { return body_; }
  const VectorOf<Scalar>& rhs() const { return rhs_; }
  const std::vector<int>& basis() const { return basis_; }

  void pivot(int row, int col) {
    const Scalar p = body_(row, col);
    for (int j = 0; j < cols(); ++j) body_(row, j) /= p;
    rhs_[row] /= p;
    for (int r = 0; r < rows(); ++r) {
      if (r == row) continue;
      const Scalar f = body_(r, col);
      if (f == Scalar(0)) continue;
      for (int j = 0; j < cols(); ++j) {
        if (body_(row, j) != Scalar(0)) body_(r, j) -= f * body_(row, j);
      }
      rhs_[r] -= f * rhs_[row];
    }
    basis_[row] = col;
  }

  /// Maximizes cost.x over columns allowed by `enterable`. Bland's rule.
  LpStatus optimize(const VectorOf<Scalar>& cost, const std::vector<bool>& enterable, long max_iters) {
    const Scalar eps = SimplexTolerance<Scalar>::pivot();
    for (long it = 0; it < max_iters; ++it) {
      int entering = -1;
      for (int j = 0; j < cols() && entering < 0; ++j) {
        if (!enterable[j] || is_basic(j)) continue;
        Scalar reduced = cost[j];
        for (int r = 0; r < rows(); ++r) {
          if (body_(r, j) != Scalar(0)) reduced -= cost[basis_[r]] * body_(r, j);
        }
        if (reduced > eps) entering = j;
      }
      if (entering < 0) return LpStatus::kOptimal;
      int leaving = -1;
      Scalar best_ratio{0};
      for (int r = 0; r < rows(); ++r) {
        if (body_(r, entering) <= eps) continue;
        const Scalar ratio = rhs_[r] / body_(r, entering);
        if (leaving < 0 || ratio < best_ratio ||
            (ratio == best_ratio && basis_[r] < basis_[leaving])) {
          leaving = r;
          best_ratio = ratio;
        }
      }
      if (leaving < 0) return LpStatus::kUnbounded;
      pivot(leaving, entering);
    }
    return LpStatus::kIterationLimit;
  }

  bool is_basic(int col) const {
    for (int b : basis_) {
      if (b == col) return true;
    }
    return false;
  }

 private:
  MatrixOf<Scalar> body_;
  VectorOf<Scalar> rhs_;
  std::vector<int> basis_;
};

}  // namespace detail

template <typename Scalar>
LpResult<Scalar> solve_lp(const LinearProgram<Scalar>& lp, long max_iters = 200000) {
  const int m = static_cast<int>(lp.A.rows());
  const int n = static_cast<int>(lp.A.cols());
  const Scalar zero{0};

  // Standard form: flip rows with negative rhs, then add slack/surplus and
  // artificial columns. `identity_col[i]` is the column that starts as unit
  // vector e_i, from which B^{-1} is read off at the end.
  std::vector<int> flip(m, 1);
  std::vector<Sense> sense = lp.sense;
  for (int i = 0; i < m; ++i) {
    if (lp.b[i] < zero) {
      flip[i] = -1;
      if (sense[i] == Sense::kLessEqual) {
        sense[i] = Sense::kGreaterEqual;
      } else if (sense[i] == Sense::kGreaterEqual) {
        sense[i] = Sense::kLessEqual;
      }
    }
  }
  int slack_count = 0;
  int artificial_count = 0;
  for (Sense s : sense) {
    if (s != Sense::kEqual) ++slack_count;
    if (s != Sense::kLessEqual) ++artificial_count;
  }
  const int total = n + slack_count + artificial_count;
  MatrixOf<Scalar> body = MatrixOf<Scalar>::Zero(m, total);
  VectorOf<Scalar> rhs(m);
  std::vector<int> basis(m);
  std::vector<int> identity_col(m);
  std::vector<bool> artificial(total, false);
  int next_slack = n;
  int next_artificial = n + slack_count;
  for (int i = 0; i < m; ++i) {
    const Scalar sign = flip[i] > 0 ? Scalar(1) : Scalar(-1);
    for (int j = 0; j < n; ++j) body(i, j) = sign * lp.A(i, j);
    rhs[i] = sign * lp.b[i];
    if (sense[i] == Sense::kLessEqual) {
      body(i, next_slack) = Scalar(1);
      basis[i] = identity_col[i] = next_slack++;
    } else {
      if (sense[i] == Sense::kGreaterEqual) body(i, next_slack++) = Scalar(-1);
      body(i, next_artificial) = Scalar(1);
      artificial[next_artificial] = true;
      basis[i] = identity_col[i] = next_artificial++;
    }
  }

  detail::Tableau<Scalar> tableau(std::move(body), std::move(rhs), std::move(basis));
  LpResult<Scalar> result;

  if (artificial_count > 0) {
    VectorOf<Scalar> phase1 = VectorOf<Scalar>::Zero(total);
    for (int j = 0; j < total; ++j) {
      if (artificial[j]) phase1[j] = Scalar(-1);
    }
    std::vector<bool> all(total, true);
    const LpStatus s = tableau.optimize(phase1, all, max_iters);
    if (s == LpStatus::kIterationLimit) {
      result.status = s;
      return result;
    }
    Scalar infeasibility{0};
    for (int r = 0; r < m; ++r) {
      if (artificial[tableau.basis()[r]]) infeasibility += tableau.rhs()[r];
    }
    if (infeasibility > SimplexTolerance<Scalar>::feasibility()) {
      result.status = LpStatus::kInfeasible;
      return result;
    }
    // Drive remaining (zero-valued) artificials out of the basis where possible.
    for (int r = 0; r < m; ++r) {
      if (!artificial[tableau.basis()[r]]) continue;
      for (int j = 0; j < total; ++j) {
        if (artificial[j] || tableau.is_basic(j)) continue;
        Scalar v = tableau.body()(r, j);
        if (v < zero) v = -v;
        if (v > SimplexTolerance<Scalar>::pivot()) {
          tableau.pivot(r, j);
          break;
        }
      }
    }
  }

  VectorOf<Scalar> cost = VectorOf<Scalar>::Zero(total);
  for (int j = 0; j < n; ++j) cost[j] = lp.objective[j];
  std::vector<bool> enterable(total, true);
  for (int j = 0; j < total; ++j) enterable[j] = !artificial[j];
  result.status = tableau.optimize(cost, enterable, max_iters);
  if (result.status != LpStatus::kOptimal) return result;

  result.x = VectorOf<Scalar>::Zero(n);
  for (int r = 0; r < m; ++r) {
    const int b = tableau.basis()[r];
    if (b < n) result.x[b] = tableau.rhs()[r];
  }
  result.objective = zero;
  for (int j = 0; j < n; ++j) result.objective += lp.objective[j] * result.x[j];
  result.duals = VectorOf<Scalar>::Zero(m);
  for (int i = 0; i < m; ++i) {
    Scalar y{0};
    for (int r = 0; r < m; ++r) {
      const Scalar& entry = tableau.body()(r, identity_col[i]);
      if (entry != zero) y += cost[tableau.basis()[r]] * entry;
    }
    result.duals[i] = flip[i] > 0 ? y : Scalar(-y);
  }
  return result;
}

}  // namespace ceri

#endif  // CERI_SIMPLEX_HPP
