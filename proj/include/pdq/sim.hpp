#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pdq/score.hpp"
#include "pdq/types.hpp"

namespace pdq::sim {

struct SimConfig {
  std::uint64_t seed = 0;
  /// Variance of the noise actually applied to sampled corners (per axis).
  double true_variance = 0.0;
  /// Variance the detector claims for its corners; 0 emits a conventional
  /// box instead of a probabilistic one.
  double reported_variance = 0.0;
  /// Probability assigned to the correct class; the remainder is spread
  /// evenly over the other classes.
  double gt_label_prob = 1.0;
  /// Probability that a ground-truth object receives no detection.
  double miss_rate = 0.0;
  /// Identical copies emitted per detected object (>= 1), true positive
  /// first.
  int duplicates_per_object = 1;
  /// Small 2x2 false detections placed around the image border.
  int fp_count = 0;
  double fp_score = 1.0;
  /// Horizontal shift of the detection box as a fraction of object width.
  double geometry_offset = 0.0;
  /// Detection area relative to the object area (1 = unchanged).
  double geometry_scale = 1.0;
};

struct SimResult {
  DetectionsByFrame detections;
  std::int64_t clipped = 0;  // sampled boxes pulled back inside the image
};

/// Standard normal quantile (Wichura's AS241 rational approximation);
/// drives corner sampling so detection files are identical across
/// platforms and standard libraries.
double normal_quantile(double p);

/// Deterministic simulated detector: every ground-truth object (unless
/// missed) yields corner samples with true_variance noise, re-sorted per axis
/// when inverted, clipped to the image, and reported with the configured
/// variance and label distribution. Per-object substreams make the output a
/// pure function of (seed, config).
SimResult simulate_detections(const Dataset& dataset, const SimConfig& cfg);

/// Single centred square object; the classic fixture for the translation,
/// scaling, and variance behaviours.
Dataset synthetic_square_scene(int image_size = 2000, int object_size = 500,
                               int n_classes = 2);

/// One random rectangle per frame, uniform size and placement.
Dataset random_rectangles_scene(int n_frames, ImageDims dims, int min_size,
                                int max_size, int n_classes,
                                std::uint64_t seed);

enum class Experiment {
  variance,
  label_prob,
  translation,
  scaling,
  miss_rate,
  duplicates,
  fp_confidence,
  bbox_spatial_prob,
};

const char* experiment_name(Experiment experiment);
std::optional<Experiment> parse_experiment(const std::string& name);

struct SweepRow {
  double param = 0.0;
  int rep = 0;
  double pdq = 0.0;
  double map = 0.0;  // NaN when not computed
  double avg_ppdq = 0.0;
  double avg_spatial = 0.0;
  double avg_label = 0.0;
  double avg_fg_quality = 0.0;
  double avg_bg_quality = 0.0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
};

struct SweepResult {
  Experiment experiment;
  std::string param_name;
  int repetitions = 0;
  std::vector<SweepRow> rows;  // grid-major, then repetition

  /// Mean pdq (or map) per grid value, in grid order.
  std::vector<double> mean_pdq_per_value() const;
  std::vector<double> mean_map_per_value() const;
  std::vector<double> grid_values() const;
};

struct SweepOptions {
  SimConfig base;
  EvalOptions eval;
  bool with_map = true;
};

/// Runs the chosen experiment over the grid: each grid value overrides one
/// SimConfig field, each repetition draws a fresh seed substream (shared
/// across grid values so repetitions pair up). Throws InvalidGrid for empty
/// or out-of-domain grids.
SweepResult run_sweep(Experiment experiment, const Dataset& dataset,
                      const std::vector<double>& grid, int repetitions,
                      std::uint64_t seed, const SweepOptions& options);

}  // namespace pdq::sim
