#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "panotrack/assignment.hpp"
#include "panotrack/geometry.hpp"

// Built-in oracle suites: the matching solver against exhaustive
// enumeration, and the circular-geometry identities. Used by the `selftest`
// CLI subcommand and by the acceptance tests.

namespace panotrack::selftest {

struct SuiteResult {
  std::string name;
  long checks = 0;
  long failures = 0;
  bool ok() const { return failures == 0; }
};

// Random nonnegative matrices (integer and real entries) up to
// max_dim x max_dim: the solver's objective must equal the brute-force
// optimum, and every produced matching must satisfy the row/column
// constraints.
inline SuiteResult assignment_oracle_suite(int n_cases = 200, int max_dim = 7,
                                           std::uint64_t seed = 7) {
  SuiteResult result{"assignment-oracle", 0, 0};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(1, max_dim);
  std::uniform_int_distribution<int> int_val(0, 9);
  std::uniform_real_distribution<double> real_val(0.0, 3.0);

  for (int c = 0; c < n_cases; ++c) {
    int rows = dim(rng), cols = dim(rng);
    bool integers = c % 2 == 0;
    Eigen::MatrixXd m(rows, cols);
    for (int u = 0; u < rows; ++u)
      for (int v = 0; v < cols; ++v)
        m(u, v) = integers ? static_cast<double>(int_val(rng)) : real_val(rng);
    AffinityMatrix A(m);

    MatchingMatrix solved = solve_matching(A);
    BruteForceResult oracle = brute_force_matching(A);

    ++result.checks;
    double got = matching_score_sq(A, solved);
    double want = matching_score_sq(A, oracle.matching);
    bool equal = integers ? got == want : std::abs(std::sqrt(got) -
                                                   std::sqrt(want)) <= 1e-9;
    if (!equal) ++result.failures;

    // Eq-style mutual exclusion: every row and column used at most once.
    ++result.checks;
    bool feasible = true;
    for (int u = 0; u < solved.rows(); ++u)
      if (solved.row_sum(u) > 1) feasible = false;
    for (int v = 0; v < solved.cols(); ++v)
      if (solved.col_sum(v) > 1) feasible = false;
    for (auto [u, v] : solved.pairs())
      if (!(A(u, v) > 0.0)) feasible = false;
    if (!feasible) ++result.failures;
  }
  return result;
}

// Symmetry, range, self-identity and exact column-shift invariance of the
// circular IoU on a fixed W=64 panel, plus the split/merge round trip for
// boxes swept across the full circle including the seam.
inline SuiteResult geometry_suite() {
  SuiteResult result{"circular-geometry", 0, 0};
  const double W = 64.0;

  auto shifted = [&](const PanoBox& b, double delta) {
    return PanoBox(wrap_column(b.x + delta, W), b.y, b.w, b.h, b.score, W);
  };

  std::vector<std::pair<PanoBox, PanoBox>> panel = {
      {PanoBox(10, 0, 12, 10, 1.0, W), PanoBox(16, 2, 12, 10, 1.0, W)},
      {PanoBox(58, 0, 10, 8, 1.0, W), PanoBox(0, 0, 6, 8, 1.0, W)},
      {PanoBox(60, 4, 12, 6, 1.0, W), PanoBox(2, 4, 8, 6, 1.0, W)},
      {PanoBox(5, 0, 4, 4, 1.0, W), PanoBox(30, 20, 4, 4, 1.0, W)},
      {PanoBox(0, 0, 64, 12, 1.0, W), PanoBox(40, 6, 20, 12, 1.0, W)},
  };

  for (const auto& [a, b] : panel) {
    double base = circular_iou(a, b);
    ++result.checks;
    if (!(base >= 0.0 && base <= 1.0)) ++result.failures;
    ++result.checks;
    if (circular_iou(b, a) != base) ++result.failures;
    ++result.checks;
    if (circular_iou(a, a) != 1.0 || circular_iou(b, b) != 1.0)
      ++result.failures;
    for (int delta = 0; delta < 64; ++delta) {
      ++result.checks;
      if (circular_iou(shifted(a, delta), shifted(b, delta)) != base)
        ++result.failures;
    }
  }

  // Split / merge round trip: a box injected into every slice that fully
  // contains it must merge back to a single copy of itself. The overlap is
  // sized so that o * s exceeds the box width, which is what guarantees at
  // least one fully-containing slice at every position.
  SliceLayout layout = make_layout(W, 4, 0.5);
  Eigen::VectorXd emb = Eigen::VectorXd::Zero(4);
  emb(0) = 1.0;
  for (int pos = 0; pos < 50; ++pos) {
    double x = wrap_column(pos * W / 50.0, W);
    PanoBox original(x, 3.0, 9.0, 7.0, 0.9, W);
    ColumnIntervals cols = pano_box_columns(original);

    std::vector<std::vector<Detection>> per_slice(layout.n_slices);
    for (int s = 0; s < layout.n_slices; ++s) {
      // Box columns relative to this slice's origin; contained iff the
      // relative span fits inside [0, slice_width).
      double rel = wrap_column(cols.spans[0].begin - layout.offsets[s], W);
      if (rel + original.w > layout.slice_width) continue;
      PanoBox mapped = slice_to_pano(
          SliceBox{rel, original.y, original.w, original.h, original.score},
          s, layout);
      per_slice[s].push_back(Detection(mapped, emb, std::nullopt, 0));
    }
    size_t copies = 0;
    for (const auto& dets : per_slice) copies += dets.size();

    ++result.checks;
    if (copies == 0) {
      ++result.failures;
      continue;
    }
    std::vector<Detection> merged = nms_merge(per_slice, 0.5, NmsMode::Hard);
    ++result.checks;
    if (merged.size() != 1) ++result.failures;
    ++result.checks;
    const PanoBox& m = merged.front().box;
    if (std::abs(m.x - original.x) > 1.0 || std::abs(m.y - original.y) > 1.0 ||
        std::abs(m.w - original.w) > 1.0 || std::abs(m.h - original.h) > 1.0)
      ++result.failures;
  }
  return result;
}

}  // namespace panotrack::selftest
