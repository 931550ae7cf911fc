#include "pdq/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pdq/map_metric.hpp"
#include "pdq/quality.hpp"

namespace pdq::sim {

namespace {

// SplitMix64 (Vigna's public-domain generator); each object gets its own
// stream so output is independent of iteration order.
struct SplitMix64 {
  std::uint64_t state;

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  double uniform01() {  // [0, 1)
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }
  double normal() {
    // Strictly inside (0, 1) so the quantile stays finite.
    const double u = (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    return normal_quantile(u);
  }
};

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9E3779B97F4A7C15ull + (h << 12) + (h >> 4);
  h = (h ^ (h >> 30)) * 0xBF58476D1CE4E5B9ull;
  h = (h ^ (h >> 27)) * 0x94D049BB133111EBull;
  return h ^ (h >> 31);
}

}  // namespace

// Wichura's AS241 rational approximation, accurate to ~1e-16.
double normal_quantile(double p) {
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) *
                     r + 6.7265770927008700853e+4) *
                    r + 4.5921953931549871457e+4) *
                   r + 1.3731693765509461125e+4) *
                  r + 1.9715909503065514427e+3) *
                 r + 1.3314166789178437745e+2) *
                r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) *
                     r + 3.9307895800092710610e+4) *
                    r + 2.1213794301586595867e+4) *
                   r + 5.3941960214247511077e+3) *
                  r + 6.8718700749205790830e+2) *
                 r + 4.2313330701600911252e+1) *
                r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) *
                    r + 2.41780725177450611770e-1) *
                   r + 1.27045825245236838258e+0) *
                  r + 3.64784832476320460504e+0) *
                 r + 5.76949722146069140550e+0) *
                r + 4.63033784615654529590e+0) *
               r + 1.42343711074968357734e+0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) *
                    r + 1.51986665636164571966e-2) *
                   r + 1.48103976427480074590e-1) *
                  r + 6.89767334985100004550e-1) *
                 r + 1.67638483018380384940e+0) *
                r + 2.05319162663775882187e+0) *
               r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) *
                    r + 1.24266094738807843860e-3) *
                   r + 2.65321895265761230930e-2) *
                  r + 2.96560571828504891230e-1) *
                 r + 1.78482653991729133580e+0) *
                r + 5.46378491116411436990e+0) *
               r + 6.65790464350110377720e+0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) *
                    r + 1.84631831751005468180e-5) *
                   r + 7.86869131145613259100e-4) *
                  r + 1.48753612908506148525e-2) *
                 r + 1.36929880922735805310e-1) *
                r + 5.99832206555887937690e-1) *
               r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

namespace {

std::vector<double> make_label_dist(int n_classes, int true_class, double p) {
  std::vector<double> dist(n_classes, 0.0);
  if (n_classes == 1) {
    dist[0] = 1.0;
    return dist;
  }
  const double rest = (1.0 - p) / (n_classes - 1);
  for (auto& d : dist) d = rest;
  dist[true_class] = p;
  return dist;
}

// 2x2 boxes marching clockwise around the border, 4 px apart, one ring
// further in per lap.
AxisAlignedBox border_box(int k, const ImageDims& dims) {
  const int step = 4;
  int remaining = k;
  for (int ring = 0;; ++ring) {
    const int inset = ring * step;
    const int x_lo = inset, x_hi = dims.width - 2 - inset;
    const int y_lo = inset, y_hi = dims.height - 2 - inset;
    if (x_hi < x_lo || y_hi < y_lo) {
      // Rings exhausted the image; pile the rest into the top-left corner.
      return {0, 0, 1, 1};
    }
    std::vector<std::pair<int, int>> spots;
    for (int x = x_lo; x <= x_hi; x += step) spots.emplace_back(x, y_lo);
    if (y_hi > y_lo) {
      for (int y = y_lo + step; y <= y_hi; y += step)
        spots.emplace_back(x_hi, y);
      for (int x = x_hi - step; x >= x_lo; x -= step)
        spots.emplace_back(x, y_hi);
      for (int y = y_hi - step; y > y_lo; y -= step)
        spots.emplace_back(x_lo, y);
    }
    if (remaining < static_cast<int>(spots.size())) {
      const auto [x, y] = spots[remaining];
      return {x, y, x + 1, y + 1};
    }
    remaining -= static_cast<int>(spots.size());
  }
}

}  // namespace

SimResult simulate_detections(const Dataset& dataset, const SimConfig& cfg) {
  SimResult result;
  const int n_classes = static_cast<int>(dataset.class_names.size());
  const double noise_sd = std::sqrt(std::max(cfg.true_variance, 0.0));
  const double scale = std::sqrt(std::max(cfg.geometry_scale, 0.0));

  for (const auto& frame : dataset.frames) {
    std::vector<Detection>& out = result.detections[frame.id];
    const double max_x = frame.dims.width - 1.0;
    const double max_y = frame.dims.height - 1.0;

    for (int i = 0; i < static_cast<int>(frame.objects.size()); ++i) {
      const auto& gt = frame.objects[i];
      SplitMix64 stream{
          mix(mix(cfg.seed, static_cast<std::uint64_t>(frame.id)),
              static_cast<std::uint64_t>(i))};
      const double miss_u = stream.uniform01();
      const double nx0 = stream.normal();
      const double ny0 = stream.normal();
      const double nx1 = stream.normal();
      const double ny1 = stream.normal();
      if (miss_u < cfg.miss_rate) continue;

      const double cx = (gt.box.x0 + gt.box.x1) / 2.0;
      const double cy = (gt.box.y0 + gt.box.y1) / 2.0;
      const double hw = (gt.box.x1 - gt.box.x0) / 2.0;
      const double hh = (gt.box.y1 - gt.box.y0) / 2.0;
      const double dx = cfg.geometry_offset * gt.box.width();

      double x0 = cx - hw * scale + dx + noise_sd * nx0;
      double y0 = cy - hh * scale + noise_sd * ny0;
      double x1 = cx + hw * scale + dx + noise_sd * nx1;
      double y1 = cy + hh * scale + noise_sd * ny1;
      if (x0 > x1) std::swap(x0, x1);
      if (y0 > y1) std::swap(y0, y1);
      const double cx0 = std::clamp(x0, 0.0, max_x);
      const double cy0 = std::clamp(y0, 0.0, max_y);
      const double cx1 = std::clamp(x1, 0.0, max_x);
      const double cy1 = std::clamp(y1, 0.0, max_y);
      if (cx0 != x0 || cy0 != y0 || cx1 != x1 || cy1 != y1) ++result.clipped;

      Detection det;
      det.frame = frame.id;
      det.label_dist = make_label_dist(n_classes, gt.class_id,
                                       cfg.gt_label_prob);
      if (cfg.reported_variance > 0.0) {
        ProbabilisticBox pb;
        pb.top_left = {cx0, cy0, cfg.reported_variance, 0.0,
                       cfg.reported_variance};
        pb.bottom_right = {cx1, cy1, cfg.reported_variance, 0.0,
                           cfg.reported_variance};
        det.geometry = pb;
      } else {
        det.geometry = AxisAlignedBox{
            static_cast<int>(std::llround(cx0)),
            static_cast<int>(std::llround(cy0)),
            static_cast<int>(std::llround(cx1)),
            static_cast<int>(std::llround(cy1))};
      }
      for (int d = 0; d < std::max(cfg.duplicates_per_object, 1); ++d) {
        out.push_back(det);
      }
    }

    const int fp_class = frame.objects.empty() ? 0 : frame.objects[0].class_id;
    for (int k = 0; k < cfg.fp_count; ++k) {
      Detection det;
      det.frame = frame.id;
      det.geometry = border_box(k, frame.dims);
      det.label_dist = make_label_dist(n_classes, fp_class, cfg.fp_score);
      out.push_back(det);
    }
    if (out.empty()) result.detections.erase(frame.id);
  }
  return result;
}

Dataset synthetic_square_scene(int image_size, int object_size,
                               int n_classes) {
  Dataset dataset;
  for (int c = 0; c < std::max(n_classes, 1); ++c) {
    dataset.class_names.push_back("class" + std::to_string(c));
  }
  const int lo = (image_size - object_size) / 2;
  const AxisAlignedBox box{lo, lo, lo + object_size - 1, lo + object_size - 1};
  Frame frame;
  frame.id = 0;
  frame.dims = {image_size, image_size};
  frame.objects.push_back({0, PixelMask::filled_box(box), box, 0});
  dataset.frames.push_back(std::move(frame));
  return dataset;
}

Dataset random_rectangles_scene(int n_frames, ImageDims dims, int min_size,
                                int max_size, int n_classes,
                                std::uint64_t seed) {
  Dataset dataset;
  for (int c = 0; c < std::max(n_classes, 1); ++c) {
    dataset.class_names.push_back("class" + std::to_string(c));
  }
  for (int f = 0; f < n_frames; ++f) {
    SplitMix64 stream{mix(seed, static_cast<std::uint64_t>(f))};
    auto uniform_int = [&](int lo, int hi) {
      return lo + static_cast<int>(stream.uniform01() * (hi - lo + 1));
    };
    const int w = std::min(uniform_int(min_size, max_size), dims.width);
    const int h = std::min(uniform_int(min_size, max_size), dims.height);
    const int x0 = uniform_int(0, dims.width - w);
    const int y0 = uniform_int(0, dims.height - h);
    const AxisAlignedBox box{x0, y0, x0 + w - 1, y0 + h - 1};
    Frame frame;
    frame.id = f;
    frame.dims = dims;
    frame.objects.push_back(
        {f, PixelMask::filled_box(box), box,
         uniform_int(0, static_cast<int>(dataset.class_names.size()) - 1)});
    dataset.frames.push_back(std::move(frame));
  }
  return dataset;
}

const char* experiment_name(Experiment experiment) {
  switch (experiment) {
    case Experiment::variance: return "variance";
    case Experiment::label_prob: return "label_prob";
    case Experiment::translation: return "translation";
    case Experiment::scaling: return "scaling";
    case Experiment::miss_rate: return "miss_rate";
    case Experiment::duplicates: return "duplicates";
    case Experiment::fp_confidence: return "fp_confidence";
    case Experiment::bbox_spatial_prob: return "bbox_spatial_prob";
  }
  return "unknown";
}

std::optional<Experiment> parse_experiment(const std::string& name) {
  for (Experiment e :
       {Experiment::variance, Experiment::label_prob, Experiment::translation,
        Experiment::scaling, Experiment::miss_rate, Experiment::duplicates,
        Experiment::fp_confidence, Experiment::bbox_spatial_prob}) {
    if (name == experiment_name(e)) return e;
  }
  return std::nullopt;
}

std::vector<double> SweepResult::grid_values() const {
  std::vector<double> values;
  for (const auto& row : rows) {
    if (values.empty() || values.back() != row.param) {
      values.push_back(row.param);
    }
  }
  return values;
}

namespace {

std::vector<double> per_value_mean(const SweepResult& sweep, bool use_map) {
  std::vector<double> means;
  const auto values = sweep.grid_values();
  for (double v : values) {
    double sum = 0.0;
    int n = 0;
    for (const auto& row : sweep.rows) {
      if (row.param == v) {
        sum += use_map ? row.map : row.pdq;
        ++n;
      }
    }
    means.push_back(n > 0 ? sum / n : 0.0);
  }
  return means;
}

}  // namespace

std::vector<double> SweepResult::mean_pdq_per_value() const {
  return per_value_mean(*this, false);
}

std::vector<double> SweepResult::mean_map_per_value() const {
  return per_value_mean(*this, true);
}

namespace {

void check_grid(Experiment experiment, const std::vector<double>& grid) {
  if (grid.empty()) {
    throw Error(ErrorCode::InvalidGrid, "empty parameter grid");
  }
  for (double v : grid) {
    bool ok = true;
    switch (experiment) {
      case Experiment::variance:
        ok = v >= 0.0;
        break;
      case Experiment::label_prob:
      case Experiment::miss_rate:
      case Experiment::fp_confidence:
        ok = v >= 0.0 && v <= 1.0;
        break;
      case Experiment::duplicates:
        ok = v >= 1.0 && v == std::floor(v);
        break;
      case Experiment::scaling:
        ok = v > 0.0;
        break;
      case Experiment::bbox_spatial_prob:
        ok = v > 0.0 && v <= 1.0;
        break;
      case Experiment::translation:
        break;
    }
    if (!ok) {
      throw Error(ErrorCode::InvalidGrid,
                  std::string(experiment_name(experiment)) +
                      " grid value " + std::to_string(v));
    }
  }
}

const char* param_name_for(Experiment experiment) {
  switch (experiment) {
    case Experiment::variance: return "true_variance";
    case Experiment::label_prob: return "gt_label_prob";
    case Experiment::translation: return "geometry_offset";
    case Experiment::scaling: return "geometry_scale";
    case Experiment::miss_rate: return "miss_rate";
    case Experiment::duplicates: return "duplicates_per_object";
    case Experiment::fp_confidence: return "fp_score";
    case Experiment::bbox_spatial_prob: return "spatial_prob";
  }
  return "value";
}

SweepRow row_from_report(const EvaluationReport& report, double param,
                         int rep, double map) {
  SweepRow row;
  row.param = param;
  row.rep = rep;
  row.pdq = report.pdq;
  row.map = map;
  row.avg_ppdq = report.avg_ppdq;
  row.avg_spatial = report.avg_spatial;
  row.avg_label = report.avg_label;
  row.avg_fg_quality = report.avg_fg_quality;
  row.avg_bg_quality = report.avg_bg_quality;
  row.tp = report.tp_total;
  row.fp = report.fp_total;
  row.fn = report.fn_total;
  return row;
}

SweepRow run_uniform_box_point(const Dataset& dataset, double p, int rep,
                               const SweepOptions& options) {
  const int n_classes = static_cast<int>(dataset.class_names.size());
  std::vector<FrameResult> frames;
  DetectionsByFrame perfect;
  for (const auto& frame : dataset.frames) {
    FrameResult fr;
    fr.frame = frame.id;
    for (int i = 0; i < static_cast<int>(frame.objects.size()); ++i) {
      const auto& gt = frame.objects[i];
      Detection det;
      det.frame = frame.id;
      det.geometry = gt.box;
      det.label_dist = make_label_dist(n_classes, gt.class_id, 1.0);
      const ProbabilityMap pmap = ProbabilityMap::uniform_box(
          gt.box, p, frame.dims, options.eval.spatial);
      PairQuality q = pair_quality(gt, det, pmap, options.eval.weight);
      if (q.ppdq < 1e-300) {
        fr.assignment.fn_gt.push_back(i);
        fr.assignment.fp_det.push_back(i);
      } else {
        fr.assignment.pairs.push_back({i, i, q});
      }
      perfect[frame.id].push_back(std::move(det));
    }
    frames.push_back(std::move(fr));
  }
  const EvaluationReport report =
      aggregate(std::move(frames), options.eval.tau, options.eval.weight);
  double map = std::numeric_limits<double>::quiet_NaN();
  if (options.with_map) map = map_score(dataset, perfect).map;
  return row_from_report(report, p, rep, map);
}

}  // namespace

SweepResult run_sweep(Experiment experiment, const Dataset& dataset,
                      const std::vector<double>& grid, int repetitions,
                      std::uint64_t seed, const SweepOptions& options) {
  check_grid(experiment, grid);
  if (repetitions < 1) {
    throw Error(ErrorCode::InvalidGrid, "repetitions must be >= 1");
  }

  SweepResult sweep;
  sweep.experiment = experiment;
  sweep.param_name = param_name_for(experiment);
  sweep.repetitions = repetitions;

  for (double value : grid) {
    for (int rep = 0; rep < repetitions; ++rep) {
      if (experiment == Experiment::bbox_spatial_prob) {
        sweep.rows.push_back(
            run_uniform_box_point(dataset, value, rep, options));
        continue;
      }
      SimConfig cfg = options.base;
      cfg.seed = mix(seed, static_cast<std::uint64_t>(rep));
      switch (experiment) {
        case Experiment::variance: cfg.true_variance = value; break;
        case Experiment::label_prob: cfg.gt_label_prob = value; break;
        case Experiment::translation: cfg.geometry_offset = value; break;
        case Experiment::scaling: cfg.geometry_scale = value; break;
        case Experiment::miss_rate: cfg.miss_rate = value; break;
        case Experiment::duplicates:
          cfg.duplicates_per_object = static_cast<int>(std::llround(value));
          break;
        case Experiment::fp_confidence: cfg.fp_score = value; break;
        case Experiment::bbox_spatial_prob: break;
      }
      const SimResult sim = simulate_detections(dataset, cfg);
      const EvaluationReport report =
          evaluate(dataset, sim.detections, options.eval);
      double map = std::numeric_limits<double>::quiet_NaN();
      if (options.with_map) {
        DetectionsByFrame filtered;
        for (const auto& [frame_id, dets] : sim.detections) {
          auto kept = filter_by_threshold(dets, options.eval.tau);
          if (!kept.empty()) filtered[frame_id] = std::move(kept);
        }
        map = map_score(dataset, filtered).map;
      }
      sweep.rows.push_back(row_from_report(report, value, rep, map));
    }
  }
  return sweep;
}

}  // namespace pdq::sim
