#pragma once

#include <utility>
#include <vector>

#include "pdq/quality.hpp"
#include "pdq/types.hpp"

namespace pdq {

struct AssignedPair {
  int gt_index = -1;
  int det_index = -1;
  PairQuality quality;
};

/// Per-frame assignment outcome: matched pairs with positive pPDQ, plus the
/// unmatched ground truths (false negatives) and detections (false
/// positives).
struct FrameAssignment {
  std::vector<AssignedPair> pairs;  // ascending gt_index
  std::vector<int> fn_gt;           // ascending
  std::vector<int> fp_det;          // ascending

  int tp_count() const { return static_cast<int>(pairs.size()); }
};

/// Maximum-total-value one-to-one assignment via the Kuhn-Munkres shortest
/// augmenting path scheme; rectangular inputs are zero-padded to square.
/// Returns (row, col) pairs for the real rows/columns only. Ties resolve by
/// the algorithm's fixed lowest-row-first scan order.
std::vector<std::pair<int, int>> hungarian_max(
    const std::vector<std::vector<double>>& value, int n_rows, int n_cols);

/// Builds the full pPDQ matrix (one probability map per detection, reused
/// across all pairings), solves the optimal assignment, and dissolves
/// zero-quality matches into FN + FP. Entries below 1e-300 count as zero.
FrameAssignment assign_frame(const std::vector<GroundTruthObject>& gts,
                             const std::vector<Detection>& dets,
                             const ImageDims& dims, const SpatialConfig& cfg,
                             double weight = 0.5);

}  // namespace pdq
