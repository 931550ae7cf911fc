#pragma once

#include <cstdint>
#include <vector>

#include "pdq/assign.hpp"
#include "pdq/types.hpp"

namespace pdq {

struct EvalOptions {
  SpatialConfig spatial;
  double tau = 0.0;
  double weight = 0.5;
  int threads = 1;
};

struct FrameResult {
  FrameId frame = 0;
  FrameAssignment assignment;
};

struct EvaluationReport {
  double pdq = 0.0;
  std::int64_t tp_total = 0;
  std::int64_t fp_total = 0;
  std::int64_t fn_total = 0;
  // Means over all true-positive pairs; 0 when there are none. Foreground and
  // background read as per-pair exp(-loss), then averaged.
  double avg_ppdq = 0.0;
  double avg_spatial = 0.0;
  double avg_label = 0.0;
  double avg_fg_quality = 0.0;
  double avg_bg_quality = 0.0;
  /// Set when there were no ground truths and no detections; pdq reports 1
  /// in that vacuous case.
  bool vacuous = false;
  double tau = 0.0;
  double weight = 0.5;
  std::vector<FrameResult> per_frame;  // ascending frame id
};

/// Keeps detections whose winning-class probability is >= tau.
std::vector<Detection> filter_by_threshold(const std::vector<Detection>& dets,
                                           double tau);

/// Deterministic reduction of per-frame assignments (taken in the given
/// order) into the final report; compensated summation keeps repeated runs
/// bit-identical.
EvaluationReport aggregate(std::vector<FrameResult> frames, double tau,
                           double weight);

/// Runs the per-frame assignment over the dataset (frames in ascending id
/// order, optionally in parallel) and aggregates. Detections referencing a
/// frame that is not in the dataset raise UnknownFrame.
EvaluationReport evaluate(const Dataset& dataset,
                          const DetectionsByFrame& detections,
                          const EvalOptions& options);

}  // namespace pdq
