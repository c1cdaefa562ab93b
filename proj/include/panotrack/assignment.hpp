#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "panotrack/core.hpp"

// Constrained trajectory-detection matching: maximize ||A (.) X||_2 subject
// to row and column sums <= 1. With nonnegative affinities this equals an
// optimal assignment on squared entries, solved by the Hungarian algorithm
// with potentials. A brute-force enumerator over all partial injective
// assignments serves as the exact oracle, and gating splits the solved
// matching into accepted pairs and the two unmatched sets.

namespace panotrack {

enum class MatchObjective {
  SquaredSum,  // the L2 objective: assignment on squared affinities
  LinearSum,   // conventional linear-sum assignment, for comparison
};

namespace detail {

// Dense Hungarian algorithm (shortest augmenting paths with potentials),
// minimizing total cost of a perfect matching on a square matrix. Fixed
// scan order makes the result deterministic. Exact for integer costs: only
// additions, subtractions and comparisons touch the values.
inline std::vector<int> hungarian_min(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      int i0 = p[j0], j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

inline double cell_gain(double value, MatchObjective objective) {
  return objective == MatchObjective::SquaredSum ? value * value : value;
}

}  // namespace detail

// Objective value ||A (.) X||_2 (or the plain sum in linear mode) of a
// matching.
inline double matching_objective(const AffinityMatrix& A,
                                 const MatchingMatrix& X,
                                 MatchObjective objective =
                                     MatchObjective::SquaredSum) {
  double sum = 0.0;
  for (auto [u, v] : X.pairs()) sum += detail::cell_gain(A(u, v), objective);
  return objective == MatchObjective::SquaredSum ? std::sqrt(sum) : sum;
}

// Sum of squared matched affinities; exact for integer-valued matrices.
inline double matching_score_sq(const AffinityMatrix& A,
                                const MatchingMatrix& X) {
  double sum = 0.0;
  for (auto [u, v] : X.pairs()) sum += A(u, v) * A(u, v);
  return sum;
}

// Solves the constrained matching problem. Rectangular matrices are padded
// with zero cells to a square; padded and zero-affinity pairs are dropped
// from the result since they contribute nothing to the objective.
inline MatchingMatrix solve_matching(const AffinityMatrix& A,
                                     MatchObjective objective =
                                         MatchObjective::SquaredSum) {
  const int K = static_cast<int>(A.rows());
  const int Q = static_cast<int>(A.cols());
  MatchingMatrix X(K, Q);
  if (K == 0 || Q == 0) return X;

  const int n = std::max(K, Q);
  Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(n, n);
  for (int u = 0; u < K; ++u)
    for (int v = 0; v < Q; ++v)
      cost(u, v) = -detail::cell_gain(A(u, v), objective);

  std::vector<int> row_to_col = detail::hungarian_min(cost);
  for (int u = 0; u < K; ++u) {
    int v = row_to_col[u];
    if (v >= 0 && v < Q && A(u, v) > 0.0) X.match(u, v);
  }
  return X;
}

struct BruteForceResult {
  double objective = 0.0;
  MatchingMatrix matching;
};

// Exhaustive enumeration of every partial injective assignment. Exact
// optimum, first-found tie-break (lowest row, then column). Intended as the
// test oracle; dimensions are capped to keep the search small.
inline BruteForceResult brute_force_matching(const AffinityMatrix& A,
                                             MatchObjective objective =
                                                 MatchObjective::SquaredSum) {
  const int K = static_cast<int>(A.rows());
  const int Q = static_cast<int>(A.cols());
  if (std::max(K, Q) > 9)
    throw std::invalid_argument("brute_force_matching: dimension over limit");

  std::vector<int> current(K, -1), best(K, -1);
  double best_sum = 0.0;

  auto recurse = [&](auto&& self, int row, unsigned used_cols,
                     double sum) -> void {
    if (row == K) {
      if (sum > best_sum) {
        best_sum = sum;
        best = current;
      }
      return;
    }
    for (int v = 0; v < Q; ++v) {
      if (used_cols & (1u << v)) continue;
      current[row] = v;
      self(self, row + 1, used_cols | (1u << v),
           sum + detail::cell_gain(A(row, v), objective));
    }
    current[row] = -1;
    self(self, row + 1, used_cols, sum);
  };
  if (K > 0 && Q > 0) recurse(recurse, 0, 0u, 0.0);

  BruteForceResult result{0.0, MatchingMatrix(K, Q)};
  for (int u = 0; u < K; ++u)
    if (best[u] != -1 && A(u, best[u]) > 0.0) result.matching.match(u, best[u]);
  result.objective = objective == MatchObjective::SquaredSum
                         ? std::sqrt(best_sum)
                         : best_sum;
  return result;
}

// Outcome of one association round. Every trajectory and detection index
// lands in exactly one of the three parts.
struct MatchResult {
  std::vector<std::pair<int, int>> pairs;
  std::vector<int> unmatched_trajs;
  std::vector<int> unmatched_dets;
};

// Applies the affinity gate: matched pairs below theta dissolve into
// unmatched on both sides.
inline MatchResult gate(const MatchingMatrix& X, const AffinityMatrix& A,
                        double theta) {
  if (X.rows() != A.rows() || X.cols() != A.cols())
    throw std::invalid_argument("gate: shape mismatch");
  MatchResult result;
  std::vector<bool> det_matched(static_cast<size_t>(X.cols()), false);
  for (int u = 0; u < X.rows(); ++u) {
    int v = X.col_of(u);
    if (v != -1 && A(u, v) >= theta) {
      result.pairs.emplace_back(u, v);
      det_matched[v] = true;
    } else {
      result.unmatched_trajs.push_back(u);
    }
  }
  for (int v = 0; v < X.cols(); ++v)
    if (!det_matched[v]) result.unmatched_dets.push_back(v);
  return result;
}

}  // namespace panotrack
