#pragma once

#include "pdq/spatial.hpp"
#include "pdq/types.hpp"

namespace pdq {

/// Pairwise quality between one ground-truth object and one detection.
struct PairQuality {
  double fg_loss = 0.0;
  double bg_loss = 0.0;
  double spatial = 0.0;  // exp(-(fg_loss + bg_loss))
  double label = 0.0;    // probability reported for the true class
  double ppdq = 0.0;     // spatial^w * label^(1-w)
};

/// Mean negative log-probability over the ground-truth segment. Pixels off
/// the map support contribute -log(epsilon).
double foreground_loss(const GroundTruthObject& gt, const ProbabilityMap& pmap);

/// Negative log of (1-p) summed over support pixels outside the ground-truth
/// box, normalized by the segment size (not by the region size, so both loss
/// terms count per ground-truth pixel).
double background_loss(const GroundTruthObject& gt, const ProbabilityMap& pmap);

double spatial_quality(const GroundTruthObject& gt, const ProbabilityMap& pmap);

/// Probability the detection assigns to the object's true class, whether or
/// not that class ranks highest. Throws ClassIndexOutOfRange.
double label_quality(const GroundTruthObject& gt, const Detection& det);

/// Weighted geometric mean, evaluated in log space with a zero short-circuit.
PairQuality pair_quality(const GroundTruthObject& gt, const Detection& det,
                         const ProbabilityMap& pmap, double weight = 0.5);

/// Convenience overload building the probability map internally.
PairQuality pair_quality(const GroundTruthObject& gt, const Detection& det,
                         const ImageDims& dims, const SpatialConfig& cfg,
                         double weight = 0.5);

}  // namespace pdq
