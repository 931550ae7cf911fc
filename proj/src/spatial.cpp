#include "pdq/spatial.hpp"

#include <algorithm>
#include <cmath>

namespace pdq {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kTwoPi = 6.28318530717958647692;
constexpr double kSqrtTwoPi = 2.50662827463100050242;
constexpr double kPsdTolerance = 1e-9;

// Gauss-Legendre half-point rules used by the Drezner-Wesolowsky/Genz
// correlation integral (6-, 12- and 20-point rules folded to one side).
constexpr double kW1[3] = {0.1713244923791705, 0.3607615730481384,
                           0.4679139345726904};
constexpr double kX1[3] = {-0.9324695142031522, -0.6612093864662647,
                           -0.2386191860831969};
constexpr double kW2[6] = {0.04717533638651177, 0.1069393259953183,
                           0.1600783285433464,  0.2031674267230659,
                           0.2334925365383547,  0.2491470458134029};
constexpr double kX2[6] = {-0.9815606342467191, -0.9041172563704750,
                           -0.7699026741943050, -0.5873179542866171,
                           -0.3678314989981802, -0.1252334085114692};
constexpr double kW3[10] = {0.01761400713915212, 0.04060142980038694,
                            0.06267204833410906, 0.08327674157670475,
                            0.1019301198172404,  0.1181945319615184,
                            0.1316886384491766,  0.1420961093183821,
                            0.1491729864726037,  0.1527533871307259};
constexpr double kX3[10] = {-0.9931285991850949, -0.9639719272779138,
                            -0.9122344282513259, -0.8391169718222188,
                            -0.7463319064601508, -0.6360536807265150,
                            -0.5108670019508271, -0.3737060887154196,
                            -0.2277858511416451, -0.07652652113349733};

// Upper-tail probability P(X > h, Y > k) for a standard bivariate normal
// with correlation r, |r| < 1.
double bvnu(double dh, double dk, double r) {
  const double* w;
  const double* x;
  int lg;
  if (std::abs(r) < 0.3) {
    w = kW1;
    x = kX1;
    lg = 3;
  } else if (std::abs(r) < 0.75) {
    w = kW2;
    x = kX2;
    lg = 6;
  } else {
    w = kW3;
    x = kX3;
    lg = 10;
  }

  double h = dh;
  double k = dk;
  double hk = h * k;
  double bvn = 0.0;

  if (std::abs(r) < 0.925) {
    if (r != 0.0) {
      const double hs = (h * h + k * k) / 2.0;
      const double asr = std::asin(r);
      for (int i = 0; i < lg; ++i) {
        for (int is = -1; is <= 1; is += 2) {
          const double sn = std::sin(asr * (is * x[i] + 1.0) / 2.0);
          bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
      }
      bvn = bvn * asr / (2.0 * kTwoPi);
    }
    bvn += normal_cdf(-h) * normal_cdf(-k);
  } else {
    if (r < 0.0) {
      k = -k;
      hk = -hk;
    }
    if (std::abs(r) < 1.0) {
      const double as = (1.0 - r) * (1.0 + r);
      double a = std::sqrt(as);
      const double bs = (h - k) * (h - k);
      const double c = (4.0 - hk) / 8.0;
      const double d = (12.0 - hk) / 16.0;
      double asr = -(bs / as + hk) / 2.0;
      if (asr > -100.0) {
        bvn = a * std::exp(asr) *
              (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 +
               c * d * as * as / 5.0);
      }
      if (-hk < 100.0) {
        const double b = std::sqrt(bs);
        bvn -= std::exp(-hk / 2.0) * kSqrtTwoPi * normal_cdf(-b / a) * b *
               (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
      }
      a /= 2.0;
      for (int i = 0; i < lg; ++i) {
        for (int is = -1; is <= 1; is += 2) {
          double xs = a * (is * x[i] + 1.0);
          xs = xs * xs;
          const double rs = std::sqrt(1.0 - xs);
          asr = -(bs / xs + hk) / 2.0;
          if (asr > -100.0) {
            const double sp = 1.0 + c * xs * (1.0 + d * xs);
            const double ep =
                std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs;
            bvn += a * w[i] * std::exp(asr) * (ep - sp);
          }
        }
      }
      bvn = -bvn / kTwoPi;
    }
    if (r > 0.0) {
      bvn += normal_cdf(-std::max(h, k));
    } else {
      bvn = -bvn;
      if (k > h) {
        if (h < 0.0) {
          bvn += normal_cdf(k) - normal_cdf(h);
        } else {
          bvn += normal_cdf(-h) - normal_cdf(-k);
        }
      }
    }
  }
  return std::clamp(bvn, 0.0, 1.0);
}

// P(X <= h, Y <= k) for a standard bivariate normal with correlation r.
double std_bvn_cdf(double h, double k, double r) { return bvnu(-h, -k, r); }

// Probabilities saturate well before |z| = 40; clamping keeps h*k finite for
// extreme standardized limits.
double clamp_z(double z) { return std::clamp(z, -40.0, 40.0); }

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double gaussian_interval_mass(double mean, double var, double lo, double hi) {
  if (hi <= lo) return 0.0;
  if (var <= 0.0) return (mean >= lo && mean < hi) ? 1.0 : 0.0;
  const double s = std::sqrt(var);
  return normal_cdf((hi - mean) / s) - normal_cdf((lo - mean) / s);
}

double bvn_rect_prob(const GaussianCorner& corner, double x0, double y0,
                     double x1, double y1) {
  if (corner.min_eigenvalue() < -kPsdTolerance) {
    throw Error(ErrorCode::NonPSDCovariance,
                "corner covariance has eigenvalue " +
                    std::to_string(corner.min_eigenvalue()));
  }
  const double vx = std::max(corner.var_x, 0.0);
  const double vy = std::max(corner.var_y, 0.0);
  // A PSD matrix with a zero diagonal entry has a zero off-diagonal, so a
  // degenerate axis always factorizes.
  if (vx == 0.0 || vy == 0.0 || corner.cov_xy == 0.0) {
    return gaussian_interval_mass(corner.mean_x, vx, x0, x1) *
           gaussian_interval_mass(corner.mean_y, vy, y0, y1);
  }

  const double sx = std::sqrt(vx);
  const double sy = std::sqrt(vy);
  const double rho = std::clamp(corner.cov_xy / (sx * sy), -1.0, 1.0);
  const double a1 = clamp_z((x0 - corner.mean_x) / sx);
  const double b1 = clamp_z((x1 - corner.mean_x) / sx);
  const double a2 = clamp_z((y0 - corner.mean_y) / sy);
  const double b2 = clamp_z((y1 - corner.mean_y) / sy);
  if (b1 <= a1 || b2 <= a2) return 0.0;

  if (rho == 1.0) {
    // Comonotone: X and Y trace the same standard variable.
    return std::max(0.0, normal_cdf(std::min(b1, b2)) -
                             normal_cdf(std::max(a1, a2)));
  }
  if (rho == -1.0) {
    const double lo = std::max(a1, -b2);
    const double hi = std::min(b1, -a2);
    return std::max(0.0, normal_cdf(hi) - normal_cdf(lo));
  }

  const double p = std_bvn_cdf(b1, b2, rho) - std_bvn_cdf(a1, b2, rho) -
                   std_bvn_cdf(b1, a2, rho) + std_bvn_cdf(a1, a2, rho);
  return std::clamp(p, 0.0, 1.0);
}

double pixel_probability(const Detection& det, int u, int v,
                         const ImageDims& dims, const SpatialConfig& cfg) {
  if (const auto* box = det.as_box()) {
    return box->contains(u, v) ? 1.0 - cfg.epsilon : cfg.epsilon;
  }
  const auto& pb = std::get<ProbabilisticBox>(det.geometry);
  const double n0 = bvn_rect_prob(pb.top_left, 0.0, 0.0, u + 1.0, v + 1.0);
  const double n1 = bvn_rect_prob(pb.bottom_right, u, v,
                                  static_cast<double>(dims.width),
                                  static_cast<double>(dims.height));
  return n0 * n1;
}

namespace {

double clamp_on_support(double raw, double eps) {
  return std::clamp(raw, eps, 1.0 - eps);
}

// Pixels whose per-axis marginal mass product reaches p_min; the joint
// probability is bounded above by each axis factor, so the support cannot
// extend past this range.
struct AxisRange {
  int lo = 0;
  int hi = -1;
  bool empty() const { return hi < lo; }
};

AxisRange scan_axis(const GaussianCorner& tl, const GaussianCorner& br,
                    bool horizontal, int n, double image_extent, double p_min) {
  const double m0 = horizontal ? tl.mean_x : tl.mean_y;
  const double v0 = std::max(horizontal ? tl.var_x : tl.var_y, 0.0);
  const double m1 = horizontal ? br.mean_x : br.mean_y;
  const double v1 = std::max(horizontal ? br.var_x : br.var_y, 0.0);
  AxisRange range{n, -1};
  for (int t = 0; t < n; ++t) {
    const double g = gaussian_interval_mass(m0, v0, 0.0, t + 1.0) *
                     gaussian_interval_mass(m1, v1, t, image_extent);
    if (g >= p_min) {
      range.lo = std::min(range.lo, t);
      range.hi = std::max(range.hi, t);
    }
  }
  return range;
}

}  // namespace

ProbabilityMap ProbabilityMap::uniform_box(const AxisAlignedBox& box, double p,
                                           const ImageDims& dims,
                                           const SpatialConfig& cfg) {
  ProbabilityMap map;
  map.dims_ = dims;
  map.epsilon_ = cfg.epsilon;
  auto [region, ok] = clip_to_image(box, dims);
  if (!ok || p < cfg.p_min) return map;
  map.region_ = region;
  map.values_.assign(static_cast<std::size_t>(region.area()),
                     clamp_on_support(p, cfg.epsilon));
  map.support_ = region.area();
  return map;
}

ProbabilityMap ProbabilityMap::from_values(const ImageDims& dims,
                                           const AxisAlignedBox& region,
                                           const std::vector<double>& raw,
                                           const SpatialConfig& cfg) {
  ProbabilityMap map;
  map.dims_ = dims;
  map.epsilon_ = cfg.epsilon;
  if (!region.well_formed()) return map;
  map.region_ = region;
  map.values_.assign(static_cast<std::size_t>(region.area()), 0.0);
  for (std::size_t i = 0; i < map.values_.size() && i < raw.size(); ++i) {
    if (raw[i] >= cfg.p_min) {
      map.values_[i] = clamp_on_support(raw[i], cfg.epsilon);
      ++map.support_;
    }
  }
  if (map.support_ == 0) map.region_ = AxisAlignedBox{0, 0, -1, -1};
  return map;
}

ProbabilityMap build_probability_map(const Detection& det,
                                     const ImageDims& dims,
                                     const SpatialConfig& cfg) {
  ProbabilityMap map;
  map.dims_ = dims;
  map.epsilon_ = cfg.epsilon;
  if (dims.width < 1 || dims.height < 1) return map;

  if (const auto* box = det.as_box()) {
    auto [region, ok] = clip_to_image(*box, dims);
    const double raw = 1.0 - cfg.epsilon;
    if (!ok || raw < cfg.p_min) return map;
    map.region_ = region;
    map.values_.assign(static_cast<std::size_t>(region.area()),
                       clamp_on_support(raw, cfg.epsilon));
    map.support_ = region.area();
    return map;
  }

  const auto& pb = std::get<ProbabilisticBox>(det.geometry);
  const AxisRange xs = scan_axis(pb.top_left, pb.bottom_right, true,
                                 dims.width, dims.width, cfg.p_min);
  const AxisRange ys = scan_axis(pb.top_left, pb.bottom_right, false,
                                 dims.height, dims.height, cfg.p_min);
  if (xs.empty() || ys.empty()) return map;

  const AxisAlignedBox region{xs.lo, ys.lo, xs.hi, ys.hi};
  const int w = region.width();
  const int h = region.height();
  map.values_.assign(static_cast<std::size_t>(region.area()), 0.0);

  const bool separable = pb.top_left.cov_xy == 0.0 && pb.bottom_right.cov_xy == 0.0;
  if (separable) {
    // Diagonal corners factorize per axis; cache the 1D masses and compose
    // them exactly as pixel_probability does so both paths agree bit for bit.
    std::vector<double> a0x(w), a1x(w), a0y(h), a1y(h);
    for (int i = 0; i < w; ++i) {
      const int u = region.x0 + i;
      a0x[i] = gaussian_interval_mass(pb.top_left.mean_x,
                                      std::max(pb.top_left.var_x, 0.0), 0.0,
                                      u + 1.0);
      a1x[i] = gaussian_interval_mass(pb.bottom_right.mean_x,
                                      std::max(pb.bottom_right.var_x, 0.0), u,
                                      dims.width);
    }
    for (int j = 0; j < h; ++j) {
      const int v = region.y0 + j;
      a0y[j] = gaussian_interval_mass(pb.top_left.mean_y,
                                      std::max(pb.top_left.var_y, 0.0), 0.0,
                                      v + 1.0);
      a1y[j] = gaussian_interval_mass(pb.bottom_right.mean_y,
                                      std::max(pb.bottom_right.var_y, 0.0), v,
                                      dims.height);
    }
    for (int j = 0; j < h; ++j) {
      double* row = map.values_.data() + static_cast<std::size_t>(j) * w;
      for (int i = 0; i < w; ++i) {
        const double n0 = a0x[i] * a0y[j];
        const double n1 = a1x[i] * a1y[j];
        const double raw = n0 * n1;
        if (raw >= cfg.p_min) {
          row[i] = clamp_on_support(raw, cfg.epsilon);
          ++map.support_;
        }
      }
    }
  } else {
    for (int j = 0; j < h; ++j) {
      double* row = map.values_.data() + static_cast<std::size_t>(j) * w;
      for (int i = 0; i < w; ++i) {
        const double raw =
            pixel_probability(det, region.x0 + i, region.y0 + j, dims, cfg);
        if (raw >= cfg.p_min) {
          row[i] = clamp_on_support(raw, cfg.epsilon);
          ++map.support_;
        }
      }
    }
  }

  if (map.support_ == 0) {
    map.values_.clear();
    return map;
  }
  map.region_ = region;
  return map;
}

}  // namespace pdq
