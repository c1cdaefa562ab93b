#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "panotrack/core.hpp"

// Panorama split/merge geometry: the slice layout used to cut the circular
// image into detector-sized windows, the mapping from slice coordinates back
// to panorama coordinates, IoU on the circular column axis, and NMS merging
// of per-slice detections.

namespace panotrack {

// Layout of N overlapping slices tiling the full circle. slice i covers
// columns [offsets[i], offsets[i] + slice_width) mod W; the last slice wraps
// across the seam when needed so the union always covers [0, W).
struct SliceLayout {
  double pano_width = 0.0;
  int n_slices = 0;
  double overlap = 0.0;
  int slice_width = 0;
  std::vector<int> offsets;
};

inline SliceLayout make_layout(double pano_width, int n_slices,
                               double overlap) {
  if (!(pano_width > 0.0) || !is_finite(pano_width))
    throw std::invalid_argument("make_layout: pano_width must be positive");
  if (n_slices < 1)
    throw std::invalid_argument("make_layout: need at least one slice");
  if (!(overlap >= 0.0 && overlap < 1.0))
    throw std::invalid_argument("make_layout: overlap outside [0, 1)");

  SliceLayout layout;
  layout.pano_width = pano_width;
  layout.n_slices = n_slices;
  layout.overlap = overlap;

  if (n_slices == 1) {
    // A single slice is the whole image.
    layout.slice_width = static_cast<int>(std::ceil(pano_width));
    layout.offsets = {0};
    return layout;
  }

  double width = pano_width / (n_slices * (1.0 - overlap));
  int slice_width = static_cast<int>(std::ceil(width - 1e-9));
  if (slice_width > pano_width)
    throw std::invalid_argument("make_layout: slice width exceeds panorama");
  layout.slice_width = slice_width;

  double stride = slice_width * (1.0 - overlap);
  layout.offsets.resize(n_slices);
  for (int i = 0; i < n_slices; ++i)
    layout.offsets[i] = static_cast<int>(std::lround(i * stride));

  // Tiling check: consecutive gaps (including seam wrap) never exceed the
  // slice width, so every column lies in at least one slice.
  for (int i = 0; i < n_slices; ++i) {
    double next = (i + 1 < n_slices) ? layout.offsets[i + 1]
                                     : layout.offsets[0] + pano_width;
    if (next - layout.offsets[i] > slice_width)
      throw std::invalid_argument("make_layout: slices do not cover the circle");
  }
  return layout;
}

// Box in slice-local coordinates, produced by a detector running on one
// slice. Columns are relative to the slice origin and never wrap.
struct SliceBox {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;
  double score = 1.0;
};

// Translates a slice-local box into panorama coordinates, reducing the left
// edge modulo W. Width, height and score are unchanged.
inline PanoBox slice_to_pano(const SliceBox& box, int slice_index,
                             const SliceLayout& layout) {
  if (slice_index < 0 || slice_index >= layout.n_slices)
    throw std::out_of_range("slice_to_pano: slice index out of range");
  if (!(box.x >= 0.0 && box.x + box.w <= layout.slice_width))
    throw std::invalid_argument("slice_to_pano: box outside slice columns");
  double x = wrap_column(box.x + layout.offsets[slice_index],
                         layout.pano_width);
  return PanoBox(x, box.y, box.w, box.h, box.score, layout.pano_width);
}

// Overlap length of two column interval sets on the circle. The pairwise
// terms are accumulated in sorted order so the result does not depend on
// argument order.
inline double column_overlap(const ColumnIntervals& a,
                             const ColumnIntervals& b) {
  std::array<double, 4> terms{};
  int n = 0;
  for (const ColumnSpan& sa : a)
    for (const ColumnSpan& sb : b) {
      double lo = std::max(sa.begin, sb.begin);
      double hi = std::min(sa.end, sb.end);
      if (hi > lo) terms[n++] = hi - lo;
    }
  std::sort(terms.begin(), terms.begin() + n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += terms[i];
  return total;
}

// Intersection-over-union with the column axis treated as circular.
// Symmetric, in [0, 1], exactly 1 for identical boxes and 0 for boxes whose
// column or row spans are disjoint.
inline double circular_iou(const PanoBox& a, const PanoBox& b) {
  if (a.pano_width != b.pano_width)
    throw std::invalid_argument("circular_iou: mismatched panorama widths");
  if (a.x == b.x && a.y == b.y && a.w == b.w && a.h == b.h) return 1.0;
  double rows = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (rows <= 0.0) return 0.0;
  double cols = column_overlap(pano_box_columns(a), pano_box_columns(b));
  if (cols <= 0.0) return 0.0;
  double inter = cols * rows;
  double uni = a.area() + b.area() - inter;
  return std::min(inter / uni, 1.0);
}

enum class NmsMode { Hard, Soft };

// Merges detection sets from all slices (already in panorama coordinates)
// into one set. Hard mode keeps the highest-score box and suppresses any
// remaining box overlapping it above iou_thresh. Soft mode decays the score
// of overlapping boxes by exp(-iou^2 / sigma) and drops boxes falling below
// score_floor. Output is sorted by descending score.
inline std::vector<Detection> nms_merge(
    const std::vector<std::vector<Detection>>& per_slice_dets,
    double iou_thresh, NmsMode mode, double soft_sigma = 0.5,
    double score_floor = 0.05) {
  std::vector<Detection> cand;
  for (const auto& dets : per_slice_dets)
    cand.insert(cand.end(), dets.begin(), dets.end());
  if (cand.empty()) return cand;

  double pano_width = cand.front().box.pano_width;
  for (const Detection& d : cand)
    if (d.box.pano_width != pano_width)
      throw std::invalid_argument("nms_merge: mismatched panorama widths");

  std::vector<Detection> kept;
  kept.reserve(cand.size());

  if (mode == NmsMode::Hard) {
    std::stable_sort(cand.begin(), cand.end(),
                     [](const Detection& a, const Detection& b) {
                       return a.box.score > b.box.score;
                     });
    std::vector<bool> suppressed(cand.size(), false);
    for (size_t i = 0; i < cand.size(); ++i) {
      if (suppressed[i]) continue;
      kept.push_back(cand[i]);
      for (size_t j = i + 1; j < cand.size(); ++j) {
        if (suppressed[j]) continue;
        if (circular_iou(cand[i].box, cand[j].box) > iou_thresh)
          suppressed[j] = true;
      }
    }
    return kept;
  }

  // Soft mode: repeatedly promote the current maximum and decay the rest.
  std::vector<Detection> pool = std::move(cand);
  while (!pool.empty()) {
    size_t best = 0;
    for (size_t i = 1; i < pool.size(); ++i)
      if (pool[i].box.score > pool[best].box.score) best = i;
    Detection top = pool[best];
    pool.erase(pool.begin() + best);
    kept.push_back(top);
    std::vector<Detection> next;
    next.reserve(pool.size());
    for (Detection& d : pool) {
      double iou = circular_iou(top.box, d.box);
      double decayed = d.box.score * std::exp(-(iou * iou) / soft_sigma);
      if (decayed >= score_floor) {
        d.box.score = decayed;
        next.push_back(std::move(d));
      }
    }
    pool = std::move(next);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const Detection& a, const Detection& b) {
                     return a.box.score > b.box.score;
                   });
  return kept;
}

}  // namespace panotrack
