#include "pdq/score.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace pdq {

namespace {

class KahanSum {
 public:
  void add(double x) {
    const double y = x - compensation_;
    const double t = sum_ + y;
    compensation_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

}  // namespace

std::vector<Detection> filter_by_threshold(const std::vector<Detection>& dets,
                                           double tau) {
  std::vector<Detection> kept;
  kept.reserve(dets.size());
  for (const auto& det : dets) {
    if (det.score() >= tau) kept.push_back(det);
  }
  return kept;
}

EvaluationReport aggregate(std::vector<FrameResult> frames, double tau,
                           double weight) {
  EvaluationReport report;
  report.tau = tau;
  report.weight = weight;

  KahanSum total, ppdq_sum, sp_sum, lbl_sum, fg_sum, bg_sum;
  for (const auto& fr : frames) {
    for (const auto& pair : fr.assignment.pairs) {
      total.add(pair.quality.ppdq);
      ppdq_sum.add(pair.quality.ppdq);
      sp_sum.add(pair.quality.spatial);
      lbl_sum.add(pair.quality.label);
      fg_sum.add(std::exp(-pair.quality.fg_loss));
      bg_sum.add(std::exp(-pair.quality.bg_loss));
    }
    report.tp_total += fr.assignment.tp_count();
    report.fp_total += static_cast<std::int64_t>(fr.assignment.fp_det.size());
    report.fn_total += static_cast<std::int64_t>(fr.assignment.fn_gt.size());
  }

  const std::int64_t denom =
      report.tp_total + report.fp_total + report.fn_total;
  if (denom == 0) {
    report.vacuous = true;
    report.pdq = 1.0;
  } else {
    report.pdq = total.value() / static_cast<double>(denom);
  }
  if (report.tp_total > 0) {
    const double n = static_cast<double>(report.tp_total);
    report.avg_ppdq = ppdq_sum.value() / n;
    report.avg_spatial = sp_sum.value() / n;
    report.avg_label = lbl_sum.value() / n;
    report.avg_fg_quality = fg_sum.value() / n;
    report.avg_bg_quality = bg_sum.value() / n;
  }
  report.per_frame = std::move(frames);
  return report;
}

EvaluationReport evaluate(const Dataset& dataset,
                          const DetectionsByFrame& detections,
                          const EvalOptions& options) {
  for (const auto& [frame_id, dets] : detections) {
    if (dataset.find_frame(frame_id) == nullptr) {
      throw Error(ErrorCode::UnknownFrame,
                  "detections reference frame " + std::to_string(frame_id));
    }
    (void)dets;
  }

  std::vector<const Frame*> frames;
  frames.reserve(dataset.frames.size());
  for (const auto& frame : dataset.frames) frames.push_back(&frame);
  std::sort(frames.begin(), frames.end(),
            [](const Frame* a, const Frame* b) { return a->id < b->id; });

  static const std::vector<Detection> kNone;
  std::vector<FrameResult> results(frames.size());
  auto run_frame = [&](std::size_t idx) {
    const Frame* frame = frames[idx];
    const auto it = detections.find(frame->id);
    const std::vector<Detection>& dets =
        it != detections.end() ? it->second : kNone;
    results[idx].frame = frame->id;
    results[idx].assignment =
        assign_frame(frame->objects, filter_by_threshold(dets, options.tau),
                     frame->dims, options.spatial, options.weight);
  };

  const int n_threads =
      std::max(1, std::min<int>(options.threads,
                                static_cast<int>(frames.size())));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < frames.size(); ++i) run_frame(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) {
      workers.emplace_back([&] {
        try {
          for (std::size_t i = next.fetch_add(1); i < frames.size();
               i = next.fetch_add(1)) {
            run_frame(i);
          }
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    if (error) std::rethrow_exception(error);
  }

  return aggregate(std::move(results), options.tau, options.weight);
}

}  // namespace pdq
