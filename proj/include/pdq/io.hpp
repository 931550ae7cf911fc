#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdq/map_metric.hpp"
#include "pdq/score.hpp"
#include "pdq/sim.hpp"
#include "pdq/types.hpp"

namespace pdq::io {

/// Column-major run lengths alternating zero/one runs, zeros first; the runs
/// must cover exactly width*height pixels.
std::vector<std::int64_t> rle_encode(const PixelMask& mask,
                                     const ImageDims& dims);
PixelMask rle_decode(const std::vector<std::int64_t>& counts,
                     const ImageDims& dims);

/// Ground-truth file: images, categories, and annotations with an inclusive
/// [x0,y0,x1,y1] bbox and an optional RLE mask (absent mask = box fill).
/// With `violations` null, invariant violations are thrown as
/// SchemaViolation; otherwise they are collected and the (possibly invalid)
/// dataset is returned for inspection.
Dataset parse_ground_truth(const std::string& path,
                           std::vector<Violation>* violations = nullptr);
Dataset parse_ground_truth_json(const nlohmann::json& root,
                                std::vector<Violation>* violations = nullptr);

DetectionsByFrame parse_detections(const std::string& path,
                                   const Dataset& dataset,
                                   std::vector<Violation>* violations = nullptr);
DetectionsByFrame parse_detections_json(const nlohmann::json& root,
                                        const Dataset& dataset,
                                        std::vector<Violation>* violations =
                                            nullptr);

nlohmann::json dataset_to_json(const Dataset& dataset);
nlohmann::json detections_to_json(const DetectionsByFrame& detections,
                                  std::int64_t clipped = 0);

void write_ground_truth(const std::string& path, const Dataset& dataset);
void write_detections(const std::string& path,
                      const DetectionsByFrame& detections,
                      std::int64_t clipped = 0);

/// Report JSON with Table-style abbreviated component names (pdq, ppdq, sp,
/// lbl, fg, bg, tp, fp, fn), per-frame pair lists, and the mAP block when
/// provided.
nlohmann::json report_to_json(const EvaluationReport& report,
                              const MapResult* map_result,
                              const Dataset& dataset);
std::string report_table(const EvaluationReport& report,
                         const MapResult* map_result);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

void write_sweep_csv(const std::string& path, const sim::SweepResult& sweep);

}  // namespace pdq::io
