#include <doctest.h>

#include <cmath>
#include <random>

#include "pdq/spatial.hpp"
#include "reference.hpp"

using namespace pdq;

namespace {

Detection pbox_detection(GaussianCorner tl, GaussianCorner br,
                         std::vector<double> labels = {1.0}) {
  Detection det;
  ProbabilisticBox pb{tl, br};
  det.geometry = pb;
  det.label_dist = std::move(labels);
  return det;
}

Detection bbox_detection(AxisAlignedBox box, std::vector<double> labels = {1.0}) {
  Detection det;
  det.geometry = box;
  det.label_dist = std::move(labels);
  return det;
}

}  // namespace

TEST_CASE("bvn total mass and quadrant symmetry") {
  const GaussianCorner unit{0, 0, 1, 0, 1};
  CHECK(bvn_rect_prob(unit, -50, -50, 50, 50) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(bvn_rect_prob(unit, -50, -50, 0, 0) == doctest::Approx(0.25).epsilon(1e-7));
}

TEST_CASE("bvn diagonal covariance is the exact 1D product") {
  const GaussianCorner corner{1.5, -2.0, 4.0, 0.0, 9.0};
  const double expected =
      (normal_cdf((3.0 - 1.5) / 2.0) - normal_cdf((-1.0 - 1.5) / 2.0)) *
      (normal_cdf((5.0 + 2.0) / 3.0) - normal_cdf((-4.0 + 2.0) / 3.0));
  CHECK(bvn_rect_prob(corner, -1, -4, 3, 5) == expected);
}

TEST_CASE("bvn correlated case matches quadrature") {
  const GaussianCorner corner{0, 0, 1, 0.5, 1};
  const double oracle = refimpl::simpson_bvn(corner, -50, -50, 0, 0);
  CHECK(bvn_rect_prob(corner, -50, -50, 0, 0) ==
        doctest::Approx(oracle).epsilon(1e-5));
}

TEST_CASE("bvn random cases against quadrature oracle") {
  std::mt19937_64 rng(20240901);
  std::uniform_real_distribution<double> mean(-3.0, 3.0);
  std::uniform_real_distribution<double> sigma(0.3, 3.0);
  std::uniform_real_distribution<double> corr(-0.9, 0.9);
  std::uniform_real_distribution<double> span(0.1, 8.0);

  double max_err = 0.0;
  for (int i = 0; i < 60; ++i) {
    GaussianCorner corner;
    corner.mean_x = mean(rng);
    corner.mean_y = mean(rng);
    const double sx = sigma(rng), sy = sigma(rng);
    const double rho = corr(rng);
    corner.var_x = sx * sx;
    corner.var_y = sy * sy;
    corner.cov_xy = rho * sx * sy;
    const double x0 = corner.mean_x - span(rng);
    const double y0 = corner.mean_y - span(rng);
    const double x1 = x0 + span(rng);
    const double y1 = y0 + span(rng);
    const double got = bvn_rect_prob(corner, x0, y0, x1, y1);
    const double want = refimpl::simpson_bvn(corner, x0, y0, x1, y1);
    max_err = std::max(max_err, std::abs(got - want));
  }
  CHECK(max_err <= 1e-5);
}

TEST_CASE("bvn near-singular correlations match external references") {
  // Frozen values from an independent high-precision implementation; these
  // exercise the |rho| >= 0.925 asymptotic branch the quadrature oracle
  // cannot resolve sharply.
  struct Case {
    GaussianCorner corner;
    double x0, y0, x1, y1;
    double expected;
  };
  const Case cases[] = {
      {{0, 0, 1, 0.95, 1}, -50, -50, 0, 0, 0.449458687947870},
      {{0, 0, 1, -0.95, 1}, -50, -50, 0, 0, 0.050541312052130},
      {{1, -1, 4, 5.94, 9}, -2, -4, 3, 2, 0.669036463983805},
      {{0.5, 0.5, 1, 0.93, 1}, 0, 0, 2, 1.5, 0.477164630881537},
      {{0, 0, 1, -0.999, 1}, -1, -1, 1, 1, 0.674055376144712},
  };
  for (const auto& c : cases) {
    CHECK(bvn_rect_prob(c.corner, c.x0, c.y0, c.x1, c.y1) ==
          doctest::Approx(c.expected).epsilon(1e-9));
  }
}

TEST_CASE("bvn degenerate axes collapse to indicators") {
  GaussianCorner point{2, 2, 0, 0, 0};
  CHECK(bvn_rect_prob(point, 0, 0, 4, 4) == 1.0);
  CHECK(bvn_rect_prob(point, 3, 0, 4, 4) == 0.0);
  // Half-open on the upper edge: mean exactly at the limit is excluded.
  CHECK(bvn_rect_prob(point, 0, 0, 2, 4) == 0.0);
  CHECK(bvn_rect_prob(point, 2, 0, 4, 4) == 1.0);

  GaussianCorner mixed{2, 2, 0, 0, 1};
  CHECK(bvn_rect_prob(mixed, 0, 0, 4, 2) ==
        doctest::Approx(normal_cdf(0.0) - normal_cdf(-2.0)));
}

TEST_CASE("bvn rejects truly non-psd covariance") {
  const GaussianCorner bad{0, 0, 1, 2, 1};
  CHECK_THROWS_AS(bvn_rect_prob(bad, 0, 0, 1, 1), Error);
}

TEST_CASE("bvn perfectly correlated corners reduce to one dimension") {
  const GaussianCorner corner{0, 0, 1, 1, 1};  // rho = 1
  // X = Y: P(X in [-1, 0.5] and X in [-0.2, 3]) = Phi(0.5) - Phi(-0.2)
  CHECK(bvn_rect_prob(corner, -1, -0.2, 0.5, 3) ==
        doctest::Approx(normal_cdf(0.5) - normal_cdf(-0.2)).epsilon(1e-12));
}

TEST_CASE("pixel probability for conventional boxes") {
  const SpatialConfig cfg;
  const ImageDims dims{10, 10};
  const Detection det = bbox_detection({2, 2, 5, 5});
  CHECK(pixel_probability(det, 3, 3, dims, cfg) == 1.0 - 1e-14);
  CHECK(pixel_probability(det, 0, 0, dims, cfg) == 1e-14);
  CHECK(pixel_probability(det, 5, 5, dims, cfg) == 1.0 - 1e-14);
  CHECK(pixel_probability(det, 6, 5, dims, cfg) == 1e-14);
}

TEST_CASE("near-degenerate gaussians reproduce the box") {
  const SpatialConfig cfg;
  const ImageDims dims{10, 10};
  const Detection det = pbox_detection({2, 2, 1e-12, 0, 1e-12},
                                       {5, 5, 1e-12, 0, 1e-12});
  CHECK(pixel_probability(det, 3, 3, dims, cfg) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(pixel_probability(det, 0, 0, dims, cfg) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("conventional map support is exactly the box") {
  const SpatialConfig cfg;
  const ImageDims dims{10, 10};
  const ProbabilityMap map =
      build_probability_map(bbox_detection({2, 2, 5, 5}), dims, cfg);
  CHECK(map.support_size() == 16);
  CHECK(map.value_at(2, 2) == 1.0 - cfg.epsilon);
  CHECK(map.value_at(5, 5) == 1.0 - cfg.epsilon);
  CHECK(map.value_at(1, 2) == 0.0);
  CHECK(map.value_at(6, 6) == 0.0);
}

TEST_CASE("probabilistic map equals the full-image scan") {
  const SpatialConfig cfg;
  const ImageDims dims{48, 40};
  const std::vector<Detection> cases = {
      pbox_detection({10, 10, 4, 0, 4}, {30, 25, 4, 0, 4}),
      pbox_detection({10, 10, 4, 1.5, 4}, {30, 25, 6, -2.0, 6}),
      pbox_detection({5, 5, 0.25, 0, 9}, {12, 30, 2, 0, 0.5}),
  };
  for (const auto& det : cases) {
    const ProbabilityMap map = build_probability_map(det, dims, cfg);
    for (int v = 0; v < dims.height; ++v) {
      for (int u = 0; u < dims.width; ++u) {
        const double raw = pixel_probability(det, u, v, dims, cfg);
        if (raw >= cfg.p_min) {
          const double expected =
              std::clamp(raw, cfg.epsilon, 1.0 - cfg.epsilon);
          CHECK(map.value_at(u, v) == expected);
        } else {
          CHECK(map.value_at(u, v) == 0.0);
        }
      }
    }
  }
}

TEST_CASE("probabilistic support strictly contains the mean box") {
  const SpatialConfig cfg;
  const ImageDims dims{20, 20};
  const ProbabilityMap map = build_probability_map(
      pbox_detection({2, 2, 4, 0, 4}, {5, 5, 4, 0, 4}), dims, cfg);
  CHECK(map.support_size() > 16);
  for (int v = 2; v <= 5; ++v) {
    for (int u = 2; u <= 5; ++u) CHECK(map.on_support(u, v));
  }
  CHECK(map.on_support(1, 1));  // smeared past the box
}

TEST_CASE("point box keeps a bounded peak") {
  const SpatialConfig cfg;
  const ImageDims dims{20, 20};
  const GaussianCorner corner{8, 8, 2, 0, 2};
  const Detection det = pbox_detection(corner, corner);
  const ProbabilityMap map = build_probability_map(det, dims, cfg);
  CHECK_FALSE(map.empty());
  // Direct product of the two corner masses at the shared point.
  const double expected =
      bvn_rect_prob(corner, 0, 0, 9, 9) * bvn_rect_prob(corner, 8, 8, 20, 20);
  CHECK(map.value_at(8, 8) == doctest::Approx(expected));
  CHECK(map.value_at(8, 8) <= 0.25 + 1e-6);
}

TEST_CASE("empty support is a valid outcome") {
  SpatialConfig cfg;
  cfg.p_min = 0.5;  // huge threshold, nothing qualifies
  const ImageDims dims{20, 20};
  const ProbabilityMap map = build_probability_map(
      pbox_detection({5, 5, 200, 0, 200}, {6, 6, 200, 0, 200}), dims, cfg);
  CHECK(map.empty());
  CHECK(map.support_size() == 0);
}

TEST_CASE("monotone decay along axis rays for diagonal covariance") {
  const SpatialConfig cfg;
  const ImageDims dims{60, 60};
  const Detection det = pbox_detection({20, 20, 9, 0, 9}, {40, 40, 9, 0, 9});
  // Inside the mean box beats the outside, and values decay outward.
  const double inside = pixel_probability(det, 30, 30, dims, cfg);
  double prev = inside;
  for (int u = 41; u < 60; ++u) {
    const double p = pixel_probability(det, u, 30, dims, cfg);
    CHECK(p <= prev + 1e-12);
    prev = p;
  }
  prev = inside;
  for (int v = 19; v >= 0; --v) {
    const double p = pixel_probability(det, 30, v, dims, cfg);
    CHECK(p <= prev + 1e-12);
    prev = p;
  }
}

TEST_CASE("probabilistic map converges to the conventional one") {
  const SpatialConfig cfg;
  const ImageDims dims{16, 16};
  const AxisAlignedBox box{4, 4, 10, 11};
  const Detection conv = bbox_detection(box);
  for (const double var : {1e-4, 1e-8}) {
    const Detection prob = pbox_detection(
        {4, 4, var, 0, var}, {10, 11, var, 0, var});
    for (int v = 0; v < dims.height; ++v) {
      for (int u = 0; u < dims.width; ++u) {
        const bool boundary = (u >= box.x0 - 1 && u <= box.x1 + 1 &&
                               v >= box.y0 - 1 && v <= box.y1 + 1) &&
                              !(u >= box.x0 + 1 && u <= box.x1 - 1 &&
                                v >= box.y0 + 1 && v <= box.y1 - 1);
        if (boundary) continue;
        const double pc = pixel_probability(conv, u, v, dims, cfg);
        const double pp = pixel_probability(prob, u, v, dims, cfg);
        CHECK(std::abs(pc - pp) <= 1e-6);
      }
    }
  }
}

TEST_CASE("probability map epsilon travels with the map") {
  SpatialConfig cfg;
  cfg.epsilon = 1e-9;
  const ImageDims dims{8, 8};
  const ProbabilityMap map =
      build_probability_map(bbox_detection({1, 1, 2, 2}), dims, cfg);
  CHECK(map.epsilon() == 1e-9);
  CHECK(map.value_at(1, 1) == 1.0 - 1e-9);
}
