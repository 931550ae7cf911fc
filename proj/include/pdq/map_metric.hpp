#pragma once

#include <cstdint>
#include <vector>

#include "pdq/types.hpp"

namespace pdq {

/// One detection's greedy-matching outcome for a single class.
struct MatchRecord {
  int class_id = 0;
  double score = 0.0;
  bool is_tp = false;
  FrameId frame = 0;
  std::int64_t submission_index = 0;  // global tie-break order
};

/// Intersection over union with inclusive-pixel areas.
double iou(const AxisAlignedBox& a, const AxisAlignedBox& b);

/// Greedy per-frame matching for one class: detections in descending score
/// (ties keep submission order) each take the ground truth of maximal IoU if
/// that IoU exceeds the threshold and the ground truth is still unmatched.
/// The argmax runs over all ground truths of the class; a detection whose
/// best-IoU ground truth is already taken becomes a false positive even when
/// a lesser-IoU one is free.
std::vector<MatchRecord> greedy_assign(const std::vector<GroundTruthObject>& gts,
                                       const std::vector<Detection>& dets,
                                       int class_id, double iou_threshold);

/// 101-point interpolated average precision for one class over the whole
/// dataset. Records are sorted by (score desc, submission order asc); the
/// smoothed curve takes the maximum precision at or beyond each sampled
/// recall, and 0 beyond the highest recall reached.
/// Throws NoGroundTruth when n_gt is 0.
double average_precision(std::vector<MatchRecord> records, std::int64_t n_gt);

struct MapResult {
  double map = 0.0;
  /// Mean AP over the IoU thresholds, indexed by class id; NaN for classes
  /// with no ground truth (excluded from the mean).
  std::vector<double> per_class_ap;
};

/// Mean AP over IoU thresholds 0.50..0.95 (step 0.05) and all classes with
/// ground truth.
MapResult map_score(const Dataset& dataset,
                    const DetectionsByFrame& detections);

}  // namespace pdq
