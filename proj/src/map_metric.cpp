#include "pdq/map_metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pdq {

double iou(const AxisAlignedBox& a, const AxisAlignedBox& b) {
  auto [inter, ok] = intersect(a, b);
  if (!ok) return 0.0;
  const double i = static_cast<double>(inter.area());
  const double u = static_cast<double>(a.area()) +
                   static_cast<double>(b.area()) - i;
  return i / u;
}

std::vector<MatchRecord> greedy_assign(const std::vector<GroundTruthObject>& gts,
                                       const std::vector<Detection>& dets,
                                       int class_id, double iou_threshold) {
  std::vector<int> gt_indices;
  for (int i = 0; i < static_cast<int>(gts.size()); ++i) {
    if (gts[i].class_id == class_id) gt_indices.push_back(i);
  }

  struct Candidate {
    double score;
    int det_index;
  };
  std::vector<Candidate> candidates;
  for (int j = 0; j < static_cast<int>(dets.size()); ++j) {
    if (dets[j].winning_class() == class_id) {
      candidates.push_back({dets[j].score(), j});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return a.score > b.score;
                   });

  std::vector<char> taken(gts.size(), 0);
  std::vector<MatchRecord> records;
  records.reserve(candidates.size());
  for (const auto& cand : candidates) {
    const AxisAlignedBox det_box = dets[cand.det_index].mean_box();
    int best_gt = -1;
    double best_iou = -1.0;
    for (int gi : gt_indices) {
      const double v = iou(gts[gi].box, det_box);
      if (v > best_iou) {
        best_iou = v;
        best_gt = gi;
      }
    }
    MatchRecord rec;
    rec.class_id = class_id;
    rec.score = cand.score;
    rec.frame = dets[cand.det_index].frame;
    rec.submission_index = cand.det_index;
    if (best_gt >= 0 && best_iou > iou_threshold && !taken[best_gt]) {
      rec.is_tp = true;
      taken[best_gt] = 1;
    }
    records.push_back(rec);
  }
  return records;
}

double average_precision(std::vector<MatchRecord> records, std::int64_t n_gt) {
  if (n_gt <= 0) {
    throw Error(ErrorCode::NoGroundTruth,
                "average precision undefined without ground truth");
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const MatchRecord& a, const MatchRecord& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.submission_index < b.submission_index;
                   });

  const std::size_t n = records.size();
  std::vector<double> recall(n), precision(n);
  std::int64_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (records[i].is_tp) ++tp;
    recall[i] = static_cast<double>(tp) / static_cast<double>(n_gt);
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }

  // Running maximum from the right gives the smoothed curve.
  std::vector<double> max_from(n);
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    running = std::max(running, precision[i]);
    max_from[i] = running;
  }

  double sum = 0.0;
  std::size_t idx = 0;
  for (int level = 0; level <= 100; ++level) {
    const double r = level / 100.0;
    while (idx < n && recall[idx] < r) ++idx;
    if (idx < n) sum += max_from[idx];
    // Recall levels above the highest reached contribute 0.
  }
  return sum / 101.0;
}

MapResult map_score(const Dataset& dataset,
                    const DetectionsByFrame& detections) {
  const int n_classes = static_cast<int>(dataset.class_names.size());
  MapResult result;
  result.per_class_ap.assign(n_classes,
                             std::numeric_limits<double>::quiet_NaN());

  std::vector<std::int64_t> gt_per_class(n_classes, 0);
  for (const auto& frame : dataset.frames) {
    for (const auto& gt : frame.objects) {
      if (gt.class_id >= 0 && gt.class_id < n_classes) {
        ++gt_per_class[gt.class_id];
      }
    }
  }

  static const std::vector<Detection> kNone;
  double total = 0.0;
  std::int64_t evaluated = 0;
  for (int c = 0; c < n_classes; ++c) {
    if (gt_per_class[c] == 0) continue;
    double class_sum = 0.0;
    for (int step = 0; step < 10; ++step) {
      const double threshold = 0.50 + 0.05 * step;
      std::vector<MatchRecord> records;
      std::int64_t submission = 0;
      for (const auto& frame : dataset.frames) {
        const auto it = detections.find(frame.id);
        const std::vector<Detection>& dets =
            it != detections.end() ? it->second : kNone;
        auto frame_records = greedy_assign(frame.objects, dets, c, threshold);
        // Rebase tie-break order to the global submission sequence.
        for (auto& rec : frame_records) rec.submission_index += submission;
        submission += static_cast<std::int64_t>(dets.size());
        records.insert(records.end(), frame_records.begin(),
                       frame_records.end());
      }
      class_sum += average_precision(std::move(records), gt_per_class[c]);
    }
    result.per_class_ap[c] = class_sum / 10.0;
    total += result.per_class_ap[c];
    ++evaluated;
  }
  result.map = evaluated > 0 ? total / static_cast<double>(evaluated) : 0.0;
  return result;
}

}  // namespace pdq
