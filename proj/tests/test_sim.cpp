#include <doctest.h>

#include <cmath>

#include "pdq/io.hpp"
#include "pdq/spatial.hpp"
#include "pdq/score.hpp"
#include "pdq/sim.hpp"

using namespace pdq;
using namespace pdq::sim;

TEST_CASE("normal quantile matches external references") {
  // Frozen values from an independent high-precision implementation.
  const std::pair<double, double> cases[] = {
      {1e-12, -7.034483825301131}, {1e-6, -4.753424308822899},
      {0.01, -2.3263478740408408}, {0.3, -0.5244005127080409},
      {0.5, 0.0},                  {0.7, 0.5244005127080407},
      {0.99, 2.3263478740408408},
  };
  for (const auto& [p, z] : cases) {
    CHECK(normal_quantile(p) == doctest::Approx(z).epsilon(1e-12));
    // Round-trip through the CDF.
    CHECK(pdq::normal_cdf(normal_quantile(p)) ==
          doctest::Approx(p).epsilon(1e-9));
  }
}

TEST_CASE("square scene fixture") {
  const Dataset full = synthetic_square_scene();
  REQUIRE(full.frames.size() == 1);
  REQUIRE(full.frames[0].objects.size() == 1);
  const auto& gt = full.frames[0].objects[0];
  CHECK(full.frames[0].dims.width == 2000);
  CHECK(gt.segment.count() == 250000);
  CHECK(gt.segment.tight_box() == gt.box);
  CHECK(validate_dataset(full).empty());

  const Dataset desk = synthetic_square_scene(200, 50, 3);
  CHECK(desk.frames[0].objects[0].segment.count() == 2500);
  CHECK(validate_dataset(desk).empty());
}

TEST_CASE("random rectangles scene is valid and seeded") {
  const Dataset a = random_rectangles_scene(40, {200, 200}, 20, 80, 3, 7);
  const Dataset b = random_rectangles_scene(40, {200, 200}, 20, 80, 3, 7);
  const Dataset c = random_rectangles_scene(40, {200, 200}, 20, 80, 3, 8);
  CHECK(validate_dataset(a).empty());
  CHECK(a.frames.size() == 40);
  bool identical = true;
  bool differs_from_c = false;
  for (int f = 0; f < 40; ++f) {
    identical = identical && a.frames[f].objects[0].box == b.frames[f].objects[0].box;
    differs_from_c =
        differs_from_c || !(a.frames[f].objects[0].box == c.frames[f].objects[0].box);
  }
  CHECK(identical);
  CHECK(differs_from_c);
}

TEST_CASE("perfect simulation scores one") {
  const Dataset d = synthetic_square_scene(200, 50, 3);
  SimConfig cfg;
  const SimResult sim = simulate_detections(d, cfg);
  REQUIRE(sim.detections.count(0) == 1);
  REQUIRE(sim.detections.at(0).size() == 1);
  CHECK(sim.clipped == 0);
  const EvaluationReport report = evaluate(d, sim.detections, {});
  CHECK(report.pdq == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("simulation is deterministic per (seed, config)") {
  const Dataset d = random_rectangles_scene(20, {200, 200}, 20, 60, 2, 1);
  SimConfig cfg;
  cfg.seed = 99;
  cfg.true_variance = 9.0;
  cfg.reported_variance = 4.0;
  cfg.miss_rate = 0.2;
  cfg.fp_count = 2;
  cfg.fp_score = 0.8;
  const auto a = simulate_detections(d, cfg);
  const auto b = simulate_detections(d, cfg);
  CHECK(io::detections_to_json(a.detections, a.clipped) ==
        io::detections_to_json(b.detections, b.clipped));

  cfg.seed = 100;
  const auto c = simulate_detections(d, cfg);
  CHECK(io::detections_to_json(a.detections, a.clipped) !=
        io::detections_to_json(c.detections, c.clipped));
}

TEST_CASE("sampled corners always form a valid in-bounds detection") {
  const Dataset d = random_rectangles_scene(30, {100, 100}, 10, 60, 2, 3);
  SimConfig cfg;
  cfg.seed = 5;
  cfg.true_variance = 900.0;  // violent jitter: inversion and clipping likely
  cfg.reported_variance = 16.0;
  const SimResult sim = simulate_detections(d, cfg);
  CHECK(sim.clipped > 0);
  CHECK(validate_detections(sim.detections, d).empty());
  for (const auto& [frame_id, dets] : sim.detections) {
    for (const auto& det : dets) {
      const auto* pb = det.as_pbox();
      REQUIRE(pb != nullptr);
      CHECK(pb->ordered());
      CHECK(pb->top_left.mean_x >= 0.0);
      CHECK(pb->bottom_right.mean_x <= 99.0);
      CHECK(pb->top_left.mean_y >= 0.0);
      CHECK(pb->bottom_right.mean_y <= 99.0);
    }
  }
}

TEST_CASE("label distribution spreads the remainder evenly") {
  const Dataset d = synthetic_square_scene(200, 50, 5);
  SimConfig cfg;
  cfg.gt_label_prob = 0.6;
  const SimResult sim = simulate_detections(d, cfg);
  const auto& dist = sim.detections.at(0)[0].label_dist;
  REQUIRE(dist.size() == 5);
  CHECK(dist[0] == 0.6);
  for (int c = 1; c < 5; ++c) CHECK(dist[c] == doctest::Approx(0.1));
}

TEST_CASE("duplicates scale the score reciprocally") {
  const Dataset d = random_rectangles_scene(10, {200, 200}, 20, 60, 2, 11);
  SweepOptions options;
  options.with_map = false;
  const SweepResult sweep =
      run_sweep(Experiment::duplicates, d, {1, 2, 4}, 1, 0, options);
  const auto means = sweep.mean_pdq_per_value();
  REQUIRE(means.size() == 3);
  CHECK(means[1] == doctest::Approx(means[0] / 2).epsilon(1e-12));
  CHECK(means[2] == doctest::Approx(means[0] / 4).epsilon(1e-12));
}

TEST_CASE("miss rate lands near its expectation") {
  const Dataset d = random_rectangles_scene(2000, {60, 60}, 10, 25, 2, 21);
  SweepOptions options;
  options.with_map = false;
  const SweepResult sweep =
      run_sweep(Experiment::miss_rate, d, {0.3}, 1, 77, options);
  CHECK(sweep.rows[0].pdq == doctest::Approx(0.7).epsilon(0.05));
}

TEST_CASE("fp confidence sweep adds border false positives") {
  const Dataset d = synthetic_square_scene(200, 50, 2);
  SweepOptions options;
  options.base.fp_count = 3;
  options.with_map = false;
  const SweepResult sweep =
      run_sweep(Experiment::fp_confidence, d, {1.0}, 1, 0, options);
  CHECK(sweep.rows[0].fp == 3);
  CHECK(sweep.rows[0].tp == 1);
  CHECK(sweep.rows[0].pdq == doctest::Approx(1.0 / 4.0).epsilon(1e-9));
}

TEST_CASE("uniform-probability sweep follows the closed form") {
  const Dataset d = synthetic_square_scene(200, 50, 2);
  SweepOptions options;
  const SweepResult sweep =
      run_sweep(Experiment::bbox_spatial_prob, d, {0.25, 0.5, 1.0 - 1e-14}, 1,
                0, options);
  const auto pdqs = sweep.mean_pdq_per_value();
  CHECK(pdqs[0] == doctest::Approx(std::sqrt(0.25)).epsilon(1e-9));
  CHECK(pdqs[1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
  CHECK(pdqs[2] == doctest::Approx(1.0).epsilon(1e-9));
  for (double m : sweep.mean_map_per_value()) {
    CHECK(m == doctest::Approx(1.0));
  }
}

TEST_CASE("translation hurts in both directions") {
  const Dataset d = synthetic_square_scene(200, 50, 2);
  SweepOptions options;
  options.base.reported_variance = 10.0;
  options.with_map = false;
  const SweepResult sweep =
      run_sweep(Experiment::translation, d, {-0.1, 0.0, 0.1}, 1, 0, options);
  const auto pdqs = sweep.mean_pdq_per_value();
  CHECK(pdqs[0] < pdqs[1]);
  CHECK(pdqs[2] < pdqs[1]);
  // Left and right shifts agree up to the one-pixel skew of the sampling
  // convention (pixel u integrates the corners at u+1 and u respectively).
  CHECK(std::abs(pdqs[0] - pdqs[2]) < 0.1);
}

TEST_CASE("shrunken detections lose score") {
  const Dataset d = synthetic_square_scene(200, 50, 2);
  SweepOptions options;
  options.with_map = false;
  const SweepResult sweep =
      run_sweep(Experiment::scaling, d, {0.8, 1.0}, 1, 0, options);
  const auto pdqs = sweep.mean_pdq_per_value();
  CHECK(pdqs[0] < pdqs[1]);
  CHECK(pdqs[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("invalid grids are rejected") {
  const Dataset d = synthetic_square_scene(200, 50, 2);
  SweepOptions options;
  CHECK_THROWS_AS(run_sweep(Experiment::variance, d, {}, 1, 0, options), Error);
  CHECK_THROWS_AS(run_sweep(Experiment::variance, d, {-1.0}, 1, 0, options),
                  Error);
  CHECK_THROWS_AS(run_sweep(Experiment::label_prob, d, {1.5}, 1, 0, options),
                  Error);
  CHECK_THROWS_AS(run_sweep(Experiment::duplicates, d, {0.0}, 1, 0, options),
                  Error);
  CHECK_THROWS_AS(run_sweep(Experiment::scaling, d, {0.0}, 1, 0, options),
                  Error);
  CHECK_THROWS_AS(run_sweep(Experiment::variance, d, {1.0}, 0, 0, options),
                  Error);
}

TEST_CASE("experiment names round-trip") {
  for (Experiment e :
       {Experiment::variance, Experiment::label_prob, Experiment::translation,
        Experiment::scaling, Experiment::miss_rate, Experiment::duplicates,
        Experiment::fp_confidence, Experiment::bbox_spatial_prob}) {
    const auto parsed = parse_experiment(experiment_name(e));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == e);
  }
  CHECK_FALSE(parse_experiment("nope").has_value());
}
