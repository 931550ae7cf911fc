#include "pdq/quality.hpp"

#include <cmath>
#include <stdexcept>

namespace pdq {

double foreground_loss(const GroundTruthObject& gt,
                       const ProbabilityMap& pmap) {
  if (gt.segment.empty()) {
    throw std::invalid_argument("foreground_loss: empty ground-truth segment");
  }
  const double eps = pmap.epsilon();
  double sum = 0.0;
  gt.segment.for_each([&](int x, int y) {
    const double p = pmap.value_at(x, y);
    sum += std::log(p > 0.0 ? p : eps);
  });
  return -sum / static_cast<double>(gt.segment.count());
}

double background_loss(const GroundTruthObject& gt,
                       const ProbabilityMap& pmap) {
  if (gt.segment.empty()) {
    throw std::invalid_argument("background_loss: empty ground-truth segment");
  }
  double sum = 0.0;
  pmap.for_each_support([&](int x, int y, double p) {
    if (!gt.box.contains(x, y)) sum += std::log1p(-p);
  });
  return -sum / static_cast<double>(gt.segment.count());
}

double spatial_quality(const GroundTruthObject& gt,
                       const ProbabilityMap& pmap) {
  return std::exp(-(foreground_loss(gt, pmap) + background_loss(gt, pmap)));
}

double label_quality(const GroundTruthObject& gt, const Detection& det) {
  if (gt.class_id < 0 ||
      gt.class_id >= static_cast<int>(det.label_dist.size())) {
    throw Error(ErrorCode::ClassIndexOutOfRange,
                "class " + std::to_string(gt.class_id) + " vs distribution of " +
                    std::to_string(det.label_dist.size()));
  }
  return det.label_dist[gt.class_id];
}

PairQuality pair_quality(const GroundTruthObject& gt, const Detection& det,
                         const ProbabilityMap& pmap, double weight) {
  PairQuality q;
  q.fg_loss = foreground_loss(gt, pmap);
  q.bg_loss = background_loss(gt, pmap);
  const double loss = q.fg_loss + q.bg_loss;
  q.spatial = std::exp(-loss);
  q.label = label_quality(gt, det);
  if (q.spatial == 0.0 || q.label == 0.0) {
    q.ppdq = 0.0;
  } else {
    // Log-space keeps the geometric mean alive where spatial^w alone would
    // not underflow but the direct product of powers might lose precision.
    q.ppdq = std::exp(weight * -loss + (1.0 - weight) * std::log(q.label));
  }
  return q;
}

PairQuality pair_quality(const GroundTruthObject& gt, const Detection& det,
                         const ImageDims& dims, const SpatialConfig& cfg,
                         double weight) {
  return pair_quality(gt, det, build_probability_map(det, dims, cfg), weight);
}

}  // namespace pdq
