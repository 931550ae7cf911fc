#pragma once

#include <cstdint>
#include <vector>

#include "pdq/types.hpp"

namespace pdq {

struct SpatialConfig {
  /// Probability clamp keeping log-losses finite.
  double epsilon = 1e-14;
  /// Support threshold: pixels with containment probability >= p_min form
  /// the detection segmentation mask.
  double p_min = 1e-4;
  /// Absolute-error contract for bvn_rect_prob. The fixed-order integrator
  /// below delivers ~1e-15, well inside the default.
  double bvn_tolerance = 1e-7;
};

/// Standard normal CDF.
double normal_cdf(double z);

/// Mass of N(mean, var) over [lo, hi]. A zero-variance axis collapses to the
/// indicator of mean in [lo, hi); the half-open interval is what makes a
/// degenerate probabilistic box reproduce the inclusive-pixel conventional
/// box exactly.
double gaussian_interval_mass(double mean, double var, double lo, double hi);

/// Integral of the corner's bivariate normal density over the axis-aligned
/// rectangle [x0,x1] x [y0,y1]. Diagonal covariances use the exact factorized
/// product of 1D CDF differences; correlated ones use the Gauss-Legendre
/// correlation-integral method of Drezner & Wesolowsky as refined by Genz.
/// Throws NonPSDCovariance when the covariance has an eigenvalue < -1e-9.
double bvn_rect_prob(const GaussianCorner& corner, double x0, double y0,
                     double x1, double y1);

/// Per-pixel spatial probability over the image, stored on a bounded window.
/// Stored values are clamped to [epsilon, 1-epsilon] on the support and 0 off
/// it; the support is exactly the set of pixels whose unclamped probability
/// reaches p_min.
class ProbabilityMap {
 public:
  ProbabilityMap() = default;

  /// Uniform probability p over a box (conventional-style map with a chosen
  /// level); empty if p < cfg.p_min or the box misses the image.
  static ProbabilityMap uniform_box(const AxisAlignedBox& box, double p,
                                    const ImageDims& dims,
                                    const SpatialConfig& cfg);

  /// Raw per-pixel values over a window; thresholding and clamping applied
  /// here. Values vector is region-local row-major, region.area() entries.
  static ProbabilityMap from_values(const ImageDims& dims,
                                    const AxisAlignedBox& region,
                                    const std::vector<double>& raw,
                                    const SpatialConfig& cfg);

  const ImageDims& dims() const { return dims_; }
  const AxisAlignedBox& region() const { return region_; }
  bool empty() const { return support_ == 0; }
  std::int64_t support_size() const { return support_; }
  double epsilon() const { return epsilon_; }

  /// Clamped probability on support; 0 elsewhere.
  double value_at(int x, int y) const {
    if (support_ == 0 || !region_.contains(x, y)) return 0.0;
    return values_[static_cast<std::size_t>(y - region_.y0) * region_.width() +
                   (x - region_.x0)];
  }
  bool on_support(int x, int y) const { return value_at(x, y) > 0.0; }

  template <class F>
  void for_each_support(F&& f) const {
    if (support_ == 0) return;
    const int w = region_.width();
    for (int y = region_.y0; y <= region_.y1; ++y) {
      const double* row =
          values_.data() + static_cast<std::size_t>(y - region_.y0) * w;
      for (int x = region_.x0; x <= region_.x1; ++x) {
        const double v = row[x - region_.x0];
        if (v > 0.0) f(x, y, v);
      }
    }
  }

 private:
  friend ProbabilityMap build_probability_map(const Detection&,
                                              const ImageDims&,
                                              const SpatialConfig&);

  ImageDims dims_;
  AxisAlignedBox region_{0, 0, -1, -1};
  std::vector<double> values_;
  std::int64_t support_ = 0;
  double epsilon_ = 1e-14;
};

/// Containment probability of one pixel. Probabilistic boxes evaluate the
/// top-left corner's mass over [0,0]..(u+1,v+1) times the bottom-right
/// corner's mass over (u,v)..(W,H); conventional boxes give 1-epsilon inside
/// and epsilon outside.
double pixel_probability(const Detection& det, int u, int v,
                         const ImageDims& dims, const SpatialConfig& cfg);

/// Evaluates pixel_probability over a bounded window (the whole box for
/// conventional detections; for probabilistic ones the rows/columns whose
/// marginal mass reaches p_min) and records the support. An empty map is a
/// valid result for detections whose probability never reaches p_min.
ProbabilityMap build_probability_map(const Detection& det,
                                     const ImageDims& dims,
                                     const SpatialConfig& cfg);

}  // namespace pdq
