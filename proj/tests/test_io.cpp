#include <doctest.h>

#include <cmath>
#include <random>

#include "pdq/io.hpp"
#include "pdq/render.hpp"
#include "pdq/score.hpp"

using namespace pdq;

namespace {

const std::string kFixtures = PDQ_FIXTURE_DIR;

render::Color blend_over_canvas(render::Color over, double alpha) {
  const render::Color canvas{40, 40, 40};
  auto mix = [&](std::uint8_t a, std::uint8_t b) {
    return static_cast<std::uint8_t>(a * (1.0 - alpha) + b * alpha);
  };
  return {mix(canvas.r, over.r), mix(canvas.g, over.g), mix(canvas.b, over.b)};
}

int count_color(const render::RgbImage& image, render::Color color) {
  int n = 0;
  for (const auto& px : image.pixels) {
    if (px == color) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("parse the bundled ground truth") {
  const Dataset d = io::parse_ground_truth(kFixtures + "/gt_small.json");
  REQUIRE(d.frames.size() == 3);
  CHECK(d.class_names == std::vector<std::string>{"block", "plus", "slab"});

  // Box-fill rule for the annotation without a mask.
  const auto& block = d.frames[0].objects[0];
  CHECK(block.segment.count() == 36);
  CHECK(block.segment == PixelMask::filled_box(block.box));

  // The explicit RLE decodes to the plus shape.
  const auto& plus = d.frames[0].objects[1];
  CHECK(plus.segment.count() == 5);
  CHECK(plus.segment.contains(11, 4));
  CHECK(plus.segment.contains(10, 4));
  CHECK(plus.segment.contains(12, 4));
  CHECK(plus.segment.contains(11, 3));
  CHECK(plus.segment.contains(11, 5));
  CHECK_FALSE(plus.segment.contains(10, 3));

  CHECK(d.frames[2].objects.empty());
}

TEST_CASE("rle length mismatch is rejected") {
  CHECK_THROWS_AS(io::rle_decode({10, 5}, {20, 14}), Error);
  try {
    io::rle_decode({10, 5}, {20, 14});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RleLengthMismatch);
  }
}

TEST_CASE("rle round-trips random masks") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const ImageDims dims{17, 11};
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::pair<int, int>> pixels;
    for (int y = 0; y < dims.height; ++y) {
      for (int x = 0; x < dims.width; ++x) {
        if (unit(rng) < 0.3) pixels.emplace_back(x, y);
      }
    }
    if (pixels.empty()) pixels.emplace_back(3, 3);
    const PixelMask mask = PixelMask::from_pixels(pixels);
    const auto counts = io::rle_encode(mask, dims);
    std::int64_t total = 0;
    for (auto c : counts) total += c;
    CHECK(total == dims.area());
    CHECK(io::rle_decode(counts, dims) == mask);
    // Canonical re-encode reproduces the counts.
    CHECK(io::rle_encode(io::rle_decode(counts, dims), dims) == counts);
  }
}

TEST_CASE("dataset serialization round-trips") {
  const Dataset d = io::parse_ground_truth(kFixtures + "/gt_small.json");
  const Dataset again = io::parse_ground_truth_json(io::dataset_to_json(d));
  REQUIRE(again.frames.size() == d.frames.size());
  CHECK(again.class_names == d.class_names);
  for (std::size_t f = 0; f < d.frames.size(); ++f) {
    REQUIRE(again.frames[f].objects.size() == d.frames[f].objects.size());
    CHECK(again.frames[f].dims.width == d.frames[f].dims.width);
    for (std::size_t i = 0; i < d.frames[f].objects.size(); ++i) {
      const auto& a = d.frames[f].objects[i];
      const auto& b = again.frames[f].objects[i];
      CHECK(a.box == b.box);
      CHECK(a.class_id == b.class_id);
      CHECK(a.segment == b.segment);
    }
  }
  // Serialized form is stable.
  CHECK(io::dataset_to_json(again) == io::dataset_to_json(d));
}

TEST_CASE("parse detections from the bundled file") {
  const Dataset d = io::parse_ground_truth(kFixtures + "/gt_small.json");
  const DetectionsByFrame dets =
      io::parse_detections(kFixtures + "/det_small.json", d);
  REQUIRE(dets.at(0).size() == 3);
  CHECK(dets.at(0)[0].score() == 0.9);
  CHECK(dets.at(0)[0].winning_class() == 0);
  CHECK(dets.at(0)[1].is_probabilistic());
  CHECK(dets.at(1)[0].winning_class() == 2);

  const DetectionsByFrame again =
      io::parse_detections_json(io::detections_to_json(dets), d);
  CHECK(again == dets);
}

TEST_CASE("detection parse errors") {
  const Dataset d = io::parse_ground_truth(kFixtures + "/gt_small.json");

  SUBCASE("non-psd covariance") {
    const nlohmann::json bad = {
        {"schema_version", 1},
        {"detections",
         {{{"image_id", 0},
           {"type", "pbox"},
           {"tl_mean", {1.0, 1.0}},
           {"tl_cov", {1.0, 2.0, 2.0, 1.0}},  // eigenvalues 3 and -1
           {"br_mean", {5.0, 5.0}},
           {"br_cov", {1.0, 0.0, 0.0, 1.0}},
           {"label_probs", {1.0, 0.0, 0.0}}}}}};
    try {
      io::parse_detections_json(bad, d);
      FAIL("expected NonPSDCovariance");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonPSDCovariance);
    }
  }
  SUBCASE("label length mismatch") {
    const nlohmann::json bad = {
        {"schema_version", 1},
        {"detections",
         {{{"image_id", 0},
           {"type", "bbox"},
           {"bbox", {0, 0, 1, 1}},
           {"label_probs", {1.0, 0.0}}}}}};
    try {
      io::parse_detections_json(bad, d);
      FAIL("expected SchemaViolation");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SchemaViolation);
    }
  }
  SUBCASE("unknown image id") {
    const nlohmann::json bad = {
        {"schema_version", 1},
        {"detections",
         {{{"image_id", 7},
           {"type", "bbox"},
           {"bbox", {0, 0, 1, 1}},
           {"label_probs", {1.0, 0.0, 0.0}}}}}};
    CHECK_THROWS_AS(io::parse_detections_json(bad, d), Error);
  }
  SUBCASE("lenient mode collects instead of throwing") {
    std::vector<Violation> violations;
    const nlohmann::json bad = {
        {"schema_version", 1},
        {"detections",
         {{{"image_id", 0},
           {"type", "bbox"},
           {"bbox", {0, 0, 1, 1}},
           {"label_probs", {0.5, 0.1, 0.1}}}}}};
    io::parse_detections_json(bad, d, &violations);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].kind == Violation::Kind::LabelDistNotNormalized);
  }
}

TEST_CASE("malformed json carries the right code") {
  try {
    io::parse_ground_truth(kFixtures + "/det_small.json");  // wrong schema
    FAIL("expected SchemaViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaViolation);
  }
}

TEST_CASE("report json exposes the table fields") {
  const Dataset d = io::parse_ground_truth(kFixtures + "/gt_small.json");
  const DetectionsByFrame dets =
      io::parse_detections(kFixtures + "/det_small.json", d);
  const EvaluationReport report = evaluate(d, dets, {});
  const MapResult map = map_score(d, dets);
  const nlohmann::json j = io::report_to_json(report, &map, d);

  for (const char* key :
       {"pdq", "ppdq", "sp", "lbl", "fg", "bg", "tp", "fp", "fn"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["component_means"] == "per_pair_exp_then_mean");
  CHECK(j["vacuous"] == false);
  CHECK(j["frames"].size() == 3);
  CHECK(j["map"]["per_class"].size() == 3);

  const std::string table = io::report_table(report, &map);
  CHECK(table.find("PDQ") != std::string::npos);
  CHECK(table.find("mAP") != std::string::npos);
}

TEST_CASE("heatmap of a conventional box is binary") {
  const SpatialConfig cfg;
  Detection det;
  det.geometry = AxisAlignedBox{2, 2, 5, 5};
  det.label_dist = {1.0};
  const auto map = build_probability_map(det, {10, 10}, cfg);
  const render::GrayImage image = render::heatmap(map);
  CHECK(image.at(3, 3) == 255);
  CHECK(image.at(0, 0) == 0);
  CHECK(image.at(6, 6) == 0);

  // Empty map renders all zeros.
  const render::GrayImage empty = render::heatmap(ProbabilityMap{});
  for (auto px : empty.pixels) CHECK(px == 0);
}

TEST_CASE("heatmap decays monotonically along outward rays") {
  const SpatialConfig cfg;
  Detection det;
  ProbabilisticBox pb;
  pb.top_left = {20, 20, 9, 0, 9};
  pb.bottom_right = {40, 40, 9, 0, 9};
  det.geometry = pb;
  det.label_dist = {1.0};
  const render::GrayImage image =
      render::heatmap(build_probability_map(det, {60, 60}, cfg));
  int prev = image.at(41, 30);
  for (int x = 42; x < 60; ++x) {
    CHECK(image.at(x, 30) <= prev);
    prev = image.at(x, 30);
  }
}

TEST_CASE("overlay shows TP, FP and FN in their colors") {
  Dataset d;
  d.class_names = {"a", "b"};
  Frame frame;
  frame.id = 0;
  frame.dims = {40, 40};
  const AxisAlignedBox matched{10, 10, 29, 29};
  const AxisAlignedBox missed{2, 32, 6, 37};
  frame.objects.push_back({0, PixelMask::filled_box(matched), matched, 0});
  frame.objects.push_back({0, PixelMask::filled_box(missed), missed, 0});
  d.frames.push_back(frame);

  // The stray detection reports zero probability for the objects' class so
  // its pairings dissolve instead of becoming marginal matches.
  std::vector<Detection> dets(2);
  dets[0].frame = 0;
  dets[0].geometry = matched;
  dets[0].label_dist = {1.0, 0.0};
  dets[1].frame = 0;
  dets[1].geometry = AxisAlignedBox{33, 2, 37, 6};
  dets[1].label_dist = {0.0, 1.0};

  const FrameAssignment fa =
      assign_frame(frame.objects, dets, frame.dims, SpatialConfig{});
  REQUIRE(fa.tp_count() == 1);
  const render::RgbImage image = render::overlay(frame, dets, fa);

  CHECK(image.at(33, 2) == render::kFalseOrange);           // FP box outline
  CHECK(image.at(4, 34) == blend_over_canvas(render::kFalseOrange, 0.6));
  CHECK(image.at(20, 20) == blend_over_canvas(render::kTrueBlue, 0.5));
  CHECK(image.at(15, 29) == render::kTrueBlue);             // TP box outline
  CHECK(count_color(image, render::kEllipseYellow) == 0);   // bbox: no ellipses
  CHECK(count_color(image, {245, 245, 245}) > 0);           // quality caption
}

TEST_CASE("overlay draws corner ellipses at sigma radii for pboxes") {
  Dataset d;
  Frame frame;
  frame.id = 0;
  frame.dims = {50, 50};
  const AxisAlignedBox box{10, 10, 39, 39};
  frame.objects.push_back({0, PixelMask::filled_box(box), box, 0});

  std::vector<Detection> dets(1);
  dets[0].frame = 0;
  ProbabilisticBox pb;
  pb.top_left = {10, 10, 4, 0, 4};
  pb.bottom_right = {39, 39, 4, 0, 4};
  dets[0].geometry = pb;
  dets[0].label_dist = {1.0};

  const FrameAssignment fa =
      assign_frame(frame.objects, dets, frame.dims, SpatialConfig{});
  const render::RgbImage image = render::overlay(frame, dets, fa);
  CHECK(count_color(image, render::kEllipseYellow) > 0);
  // sigma = 2: rings cross the horizontal through the corner mean at 2, 4, 6.
  CHECK(image.at(8, 10) == render::kEllipseYellow);
  CHECK(image.at(6, 10) == render::kEllipseYellow);
  CHECK(image.at(4, 10) == render::kEllipseYellow);
}

TEST_CASE("sweep csv layout") {
  sim::SweepResult sweep;
  sweep.experiment = sim::Experiment::label_prob;
  sweep.param_name = "gt_label_prob";
  sweep.repetitions = 2;
  sweep.rows = {{0.5, 0, 0.7, 1.0, 0.7, 1, 0.5, 1, 1, 3, 0, 0},
                {0.5, 1, 0.71, 1.0, 0.71, 1, 0.5, 1, 1, 3, 0, 0}};
  const std::string path = "/tmp/pdq_sweep_test.csv";
  io::write_sweep_csv(path, sweep);
  const std::string text = io::read_text_file(path);
  CHECK(text.find("experiment,parameter,value,rep,pdq,map") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);  // header + 2 rows
}
