#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pdq/io.hpp"
#include "pdq/map_metric.hpp"
#include "pdq/render.hpp"
#include "pdq/score.hpp"
#include "pdq/sim.hpp"

namespace {

int default_threads() {
  if (const char* env = std::getenv("PDQ_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

struct CommonEvalFlags {
  double tau = 0.0;
  double weight = 0.5;
  double epsilon = 1e-14;
  double p_min = 1e-4;
  int threads = default_threads();

  void attach(CLI::App* cmd) {
    cmd->add_option("--tau", tau, "Winning-class probability threshold")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--weight", weight,
                    "Spatial weight of the pairwise geometric mean")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--epsilon", epsilon, "Probability clamp");
    cmd->add_option("--pmin", p_min, "Support threshold");
    cmd->add_option("--threads", threads, "Worker threads (frames)")
        ->check(CLI::PositiveNumber);
  }

  pdq::EvalOptions options() const {
    pdq::EvalOptions opt;
    opt.spatial.epsilon = epsilon;
    opt.spatial.p_min = p_min;
    opt.tau = tau;
    opt.weight = weight;
    opt.threads = threads;
    return opt;
  }
};

int run_evaluate(const std::string& gt_path, const std::string& det_path,
                 const CommonEvalFlags& flags, const std::string& out_path,
                 bool with_map) {
  const pdq::Dataset dataset = pdq::io::parse_ground_truth(gt_path);
  const pdq::DetectionsByFrame detections =
      pdq::io::parse_detections(det_path, dataset);
  const pdq::EvaluationReport report =
      pdq::evaluate(dataset, detections, flags.options());

  std::optional<pdq::MapResult> map_result;
  if (with_map) {
    pdq::DetectionsByFrame filtered;
    for (const auto& [frame_id, dets] : detections) {
      auto kept = pdq::filter_by_threshold(dets, flags.tau);
      if (!kept.empty()) filtered[frame_id] = std::move(kept);
    }
    map_result = pdq::map_score(dataset, filtered);
  }
  const pdq::MapResult* map_ptr = map_result ? &*map_result : nullptr;

  std::cout << pdq::io::report_table(report, map_ptr);
  if (!out_path.empty()) {
    pdq::io::write_text_file(
        out_path, pdq::io::report_to_json(report, map_ptr, dataset).dump(2) + "\n");
  }
  return 0;
}

int run_validate(const std::string& gt_path, const std::string& det_path) {
  std::vector<pdq::Violation> violations;
  const pdq::Dataset dataset = pdq::io::parse_ground_truth(gt_path, &violations);
  if (!det_path.empty()) {
    pdq::io::parse_detections(det_path, dataset, &violations);
  }
  for (const auto& v : violations) {
    std::cerr << v.to_string() << "\n";
  }
  if (violations.empty()) {
    std::cout << "ok\n";
    return 0;
  }
  std::cerr << violations.size() << " violation(s)\n";
  return 1;
}

int run_render(const std::string& gt_path, const std::string& det_path,
               pdq::FrameId frame_id, const std::string& out_path,
               int heatmap_index, const CommonEvalFlags& flags) {
  const pdq::Dataset dataset = pdq::io::parse_ground_truth(gt_path);
  const pdq::DetectionsByFrame detections =
      pdq::io::parse_detections(det_path, dataset);
  const pdq::Frame* frame = dataset.find_frame(frame_id);
  if (frame == nullptr) {
    throw pdq::Error(pdq::ErrorCode::UnknownFrame,
                     "frame " + std::to_string(frame_id));
  }
  const auto it = detections.find(frame_id);
  static const std::vector<pdq::Detection> kNone;
  const std::vector<pdq::Detection>& dets =
      it != detections.end() ? it->second : kNone;
  const pdq::EvalOptions options = flags.options();

  if (heatmap_index >= 0) {
    if (heatmap_index >= static_cast<int>(dets.size())) {
      throw pdq::Error(pdq::ErrorCode::SchemaViolation,
                       "frame has no detection " + std::to_string(heatmap_index));
    }
    const pdq::ProbabilityMap pmap = pdq::build_probability_map(
        dets[heatmap_index], frame->dims, options.spatial);
    pdq::render::write_pgm(out_path, pdq::render::heatmap(pmap));
    return 0;
  }

  const std::vector<pdq::Detection> kept =
      pdq::filter_by_threshold(dets, options.tau);
  const pdq::FrameAssignment assignment = pdq::assign_frame(
      frame->objects, kept, frame->dims, options.spatial, options.weight);
  pdq::render::write_ppm(out_path,
                         pdq::render::overlay(*frame, kept, assignment));
  return 0;
}

struct SimulateFlags {
  std::string experiment = "variance";
  std::vector<double> grid;
  int reps = 20;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  bool plot = false;
  bool desk_scale = false;
  std::string scene = "square";
  int n_frames = 100;
  pdq::sim::SimConfig base;
};

int run_simulate(const SimulateFlags& flags, const CommonEvalFlags& eval) {
  const auto experiment = pdq::sim::parse_experiment(flags.experiment);
  if (!experiment) {
    std::cerr << "unknown experiment: " << flags.experiment << "\n";
    return 2;
  }

  pdq::Dataset dataset;
  if (flags.scene == "square") {
    dataset = flags.desk_scale ? pdq::sim::synthetic_square_scene(200, 50, 3)
                               : pdq::sim::synthetic_square_scene();
  } else if (flags.scene == "rects") {
    const int size = flags.desk_scale ? 200 : 2000;
    dataset = pdq::sim::random_rectangles_scene(
        flags.n_frames, {size, size}, size / 10, size * 2 / 5, 3, flags.seed);
  } else {
    std::cerr << "unknown scene: " << flags.scene << "\n";
    return 2;
  }

  pdq::sim::SweepOptions options;
  options.base = flags.base;
  options.eval = eval.options();
  const pdq::sim::SweepResult sweep = pdq::sim::run_sweep(
      *experiment, dataset, flags.grid, flags.reps, flags.seed, options);

  std::filesystem::create_directories(flags.out_dir);
  const std::string stem =
      flags.out_dir + "/" + pdq::sim::experiment_name(*experiment);
  pdq::io::write_sweep_csv(stem + ".csv", sweep);
  if (flags.plot) {
    pdq::render::write_ppm(stem + ".ppm", pdq::render::sweep_plot(sweep));
  }

  const auto values = sweep.grid_values();
  const auto pdq_means = sweep.mean_pdq_per_value();
  const auto map_means = sweep.mean_map_per_value();
  std::cout << sweep.param_name << ",mean_pdq,mean_map\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::cout << values[i] << "," << pdq_means[i] << "," << map_means[i]
              << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic detection evaluation toolkit"};
  app.require_subcommand(1);

  CommonEvalFlags eval_flags;

  auto* evaluate = app.add_subcommand(
      "evaluate", "Score detections against ground truth");
  std::string gt_path, det_path, out_path;
  bool with_map = false;
  evaluate->add_option("--gt", gt_path, "Ground-truth JSON")->required();
  evaluate->add_option("--det", det_path, "Detections JSON")->required();
  evaluate->add_option("--out", out_path, "Report JSON output path");
  evaluate->add_flag("--map", with_map, "Also compute the mAP baseline");
  eval_flags.attach(evaluate);

  auto* validate = app.add_subcommand("validate", "Check file invariants");
  std::string val_gt, val_det;
  validate->add_option("--gt", val_gt, "Ground-truth JSON")->required();
  validate->add_option("--det", val_det, "Detections JSON");

  auto* render = app.add_subcommand("render", "Draw an assignment overlay");
  std::string render_gt, render_det, render_out;
  int render_frame = 0;
  int heatmap_index = -1;
  render->add_option("--gt", render_gt, "Ground-truth JSON")->required();
  render->add_option("--det", render_det, "Detections JSON")->required();
  render->add_option("--frame", render_frame, "Frame id")->required();
  render->add_option("--out", render_out, "Output image (PPM, or PGM with --heatmap)")
      ->required();
  render->add_option("--heatmap", heatmap_index,
                     "Render this detection's probability map instead");
  eval_flags.attach(render);

  auto* simulate =
      app.add_subcommand("simulate", "Run a controlled detector experiment");
  SimulateFlags sim_flags;
  simulate->add_option("--experiment", sim_flags.experiment,
                       "variance|label_prob|translation|scaling|miss_rate|"
                       "duplicates|fp_confidence|bbox_spatial_prob")
      ->required();
  simulate->add_option("--grid", sim_flags.grid, "Parameter values")
      ->required()
      ->delimiter(',');
  simulate->add_option("--reps", sim_flags.reps, "Repetitions per value");
  simulate->add_option("--seed", sim_flags.seed, "Base RNG seed");
  simulate->add_option("--out", sim_flags.out_dir, "Output directory");
  simulate->add_flag("--plot", sim_flags.plot, "Also write a line-plot image");
  simulate->add_flag("--desk-scale", sim_flags.desk_scale,
                     "Use the 1/10-scale fixtures");
  simulate->add_option("--scene", sim_flags.scene, "square|rects");
  simulate->add_option("--frames", sim_flags.n_frames,
                       "Frame count for the rects scene");
  simulate->add_option("--sigma2", sim_flags.base.reported_variance,
                       "Reported corner variance");
  simulate->add_option("--s2", sim_flags.base.true_variance,
                       "True sampling variance");
  simulate->add_option("--label-prob", sim_flags.base.gt_label_prob,
                       "Probability on the correct class");
  simulate->add_option("--miss-rate", sim_flags.base.miss_rate,
                       "Probability of missing an object");
  simulate->add_option("--dup", sim_flags.base.duplicates_per_object,
                       "Duplicates per object");
  simulate->add_option("--fp-count", sim_flags.base.fp_count,
                       "Border false positives per frame");
  simulate->add_option("--fp-score", sim_flags.base.fp_score,
                       "Confidence of injected false positives");
  eval_flags.attach(simulate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help
    }
    app.exit(e);
    return 2;
  }

  try {
    if (evaluate->parsed()) {
      return run_evaluate(gt_path, det_path, eval_flags, out_path, with_map);
    }
    if (validate->parsed()) {
      return run_validate(val_gt, val_det);
    }
    if (render->parsed()) {
      return run_render(render_gt, render_det, render_frame, render_out,
                        heatmap_index, eval_flags);
    }
    if (simulate->parsed()) {
      return run_simulate(sim_flags, eval_flags);
    }
  } catch (const pdq::Error& e) {
    std::cerr << "error[" << pdq::error_code_name(e.code()) << "] " << e.what()
              << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
