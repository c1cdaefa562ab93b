#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "panotrack/assignment.hpp"
#include "panotrack/core.hpp"
#include "panotrack/geometry.hpp"

// CLEAR-MOT evaluation of tracker output against ground truth: per frame,
// ground-truth boxes are put in correspondence with hypothesis boxes by
// circular IoU, existing correspondences are kept while they still overlap,
// and the remainder is re-optimized. MOTA = 1 - (FN + FP + IDS) / GT.

namespace panotrack {

// Per-frame (id, box) lists for one side of the evaluation.
class FrameAnnotations {
 public:
  using Entry = std::pair<int, PanoBox>;

  void add(int frame, int id, const PanoBox& box) {
    auto& list = frames_[frame];
    for (const Entry& e : list)
      if (e.first == id)
        throw std::invalid_argument("FrameAnnotations: duplicate id in frame");
    list.emplace_back(id, box);
  }

  bool empty() const { return frames_.empty(); }
  int min_frame() const { return frames_.begin()->first; }
  int max_frame() const { return frames_.rbegin()->first; }
  const std::map<int, std::vector<Entry>>& frames() const { return frames_; }

  const std::vector<Entry>* at(int frame) const {
    auto it = frames_.find(frame);
    return it == frames_.end() ? nullptr : &it->second;
  }

 private:
  std::map<int, std::vector<Entry>> frames_;
};

struct MotSummary {
  double mota = 1.0;
  long id_switches = 0;
  long false_positives = 0;
  long false_negatives = 0;
  long gt_count = 0;
  long matches = 0;
};

inline MotSummary evaluate(const FrameAnnotations& gt,
                           const FrameAnnotations& hyp, double iou_match) {
  if (gt.empty() && !hyp.empty())
    throw std::invalid_argument("evaluate: hypothesis frames without ground truth");
  if (!gt.empty() && !hyp.empty() &&
      (hyp.min_frame() < gt.min_frame() || hyp.max_frame() > gt.max_frame()))
    throw std::invalid_argument("evaluate: frame ranges differ");

  MotSummary sum;
  if (gt.empty()) return sum;

  // gt id -> hyp id of the most recent correspondence; persists across
  // frames where the target goes unmatched.
  std::map<int, int> last_match;

  for (int frame = gt.min_frame(); frame <= gt.max_frame(); ++frame) {
    static const std::vector<FrameAnnotations::Entry> kNone;
    const auto& gts = gt.at(frame) ? *gt.at(frame) : kNone;
    const auto& hyps = hyp.at(frame) ? *hyp.at(frame) : kNone;
    sum.gt_count += static_cast<long>(gts.size());

    std::vector<bool> gt_used(gts.size(), false), hyp_used(hyps.size(), false);
    std::vector<std::pair<size_t, size_t>> pairs;

    // Continuation pass: keep the previous correspondence while both sides
    // exist and still overlap.
    for (size_t i = 0; i < gts.size(); ++i) {
      auto it = last_match.find(gts[i].first);
      if (it == last_match.end()) continue;
      for (size_t j = 0; j < hyps.size(); ++j) {
        if (hyp_used[j] || hyps[j].first != it->second) continue;
        if (circular_iou(gts[i].second, hyps[j].second) >= iou_match) {
          gt_used[i] = true;
          hyp_used[j] = true;
          pairs.emplace_back(i, j);
        }
        break;
      }
    }

    // Re-optimize the remainder: maximize total IoU over pairs at or above
    // the threshold.
    std::vector<size_t> free_gt, free_hyp;
    for (size_t i = 0; i < gts.size(); ++i)
      if (!gt_used[i]) free_gt.push_back(i);
    for (size_t j = 0; j < hyps.size(); ++j)
      if (!hyp_used[j]) free_hyp.push_back(j);
    if (!free_gt.empty() && !free_hyp.empty()) {
      Eigen::MatrixXd overlap(free_gt.size(), free_hyp.size());
      for (size_t a = 0; a < free_gt.size(); ++a)
        for (size_t b = 0; b < free_hyp.size(); ++b) {
          double iou = circular_iou(gts[free_gt[a]].second,
                                    hyps[free_hyp[b]].second);
          overlap(a, b) = iou >= iou_match ? iou : 0.0;
        }
      MatchingMatrix X = solve_matching(AffinityMatrix(overlap),
                                        MatchObjective::LinearSum);
      for (auto [a, b] : X.pairs())
        pairs.emplace_back(free_gt[a], free_hyp[b]);
    }

    for (auto [i, j] : pairs) {
      int gt_id = gts[i].first;
      int hyp_id = hyps[j].first;
      auto it = last_match.find(gt_id);
      if (it != last_match.end() && it->second != hyp_id) ++sum.id_switches;
      last_match[gt_id] = hyp_id;
    }
    sum.matches += static_cast<long>(pairs.size());
    sum.false_negatives += static_cast<long>(gts.size() - pairs.size());
    sum.false_positives += static_cast<long>(hyps.size() - pairs.size());
  }

  long errors = sum.false_negatives + sum.false_positives + sum.id_switches;
  if (sum.gt_count > 0)
    sum.mota = 1.0 - static_cast<double>(errors) /
                         static_cast<double>(sum.gt_count);
  else
    sum.mota = errors == 0 ? 1.0 : -std::numeric_limits<double>::infinity();
  return sum;
}

}  // namespace panotrack
