#include "pdq/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace pdq::io {

using nlohmann::json;

std::vector<std::int64_t> rle_encode(const PixelMask& mask,
                                     const ImageDims& dims) {
  std::vector<std::int64_t> counts;
  std::int64_t run = 0;
  bool value = false;  // zeros first
  auto push = [&](bool bit, std::int64_t n) {
    while (n > 0) {
      if (bit == value) {
        run += n;
        n = 0;
      } else {
        counts.push_back(run);
        value = !value;
        run = 0;
      }
    }
  };
  for (int x = 0; x < dims.width; ++x) {
    for (int y = 0; y < dims.height; ++y) {
      push(mask.contains(x, y), 1);
    }
  }
  counts.push_back(run);
  return counts;
}

PixelMask rle_decode(const std::vector<std::int64_t>& counts,
                     const ImageDims& dims) {
  const std::int64_t expected = dims.area();
  std::int64_t total = 0;
  for (std::int64_t c : counts) {
    if (c < 0) {
      throw Error(ErrorCode::RleLengthMismatch, "negative run length");
    }
    total += c;
  }
  if (total != expected) {
    throw Error(ErrorCode::RleLengthMismatch,
                "runs cover " + std::to_string(total) + " pixels, image has " +
                    std::to_string(expected));
  }
  std::vector<std::pair<int, int>> pixels;
  std::int64_t index = 0;
  bool value = false;
  for (std::int64_t c : counts) {
    if (value) {
      for (std::int64_t i = 0; i < c; ++i) {
        const std::int64_t idx = index + i;
        pixels.emplace_back(static_cast<int>(idx / dims.height),
                            static_cast<int>(idx % dims.height));
      }
    }
    index += c;
    value = !value;
  }
  return PixelMask::from_pixels(pixels);
}

namespace {

[[noreturn]] void schema_error(const std::string& where,
                               const std::string& what) {
  throw Error(ErrorCode::SchemaViolation, where + ": " + what);
}

const json& require(const json& obj, const char* key,
                    const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) schema_error(where, std::string("missing '") + key + "'");
  return *it;
}

int require_int(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number_integer()) {
    schema_error(where, std::string("'") + key + "' must be an integer");
  }
  return v.get<int>();
}

AxisAlignedBox parse_bbox(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.size() != 4) {
    schema_error(where, "bbox must be [x0,y0,x1,y1]");
  }
  for (const auto& v : arr) {
    if (!v.is_number()) schema_error(where, "bbox entries must be numbers");
  }
  return {arr[0].get<int>(), arr[1].get<int>(), arr[2].get<int>(),
          arr[3].get<int>()};
}

json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  json root;
  try {
    in >> root;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedJson, path + ": " + e.what());
  }
  return root;
}

void handle_violations(std::vector<Violation> found,
                       std::vector<Violation>* out) {
  if (out != nullptr) {
    out->insert(out->end(), found.begin(), found.end());
    return;
  }
  if (!found.empty()) {
    std::ostringstream os;
    os << found.size() << " invariant violation(s):";
    for (const auto& v : found) os << "\n  " << v.to_string();
    throw Error(ErrorCode::SchemaViolation, os.str());
  }
}

}  // namespace

Dataset parse_ground_truth_json(const json& root,
                                std::vector<Violation>* violations) {
  if (!root.is_object()) schema_error("ground truth", "top level must be an object");
  Dataset dataset;

  const json& categories = require(root, "categories", "ground truth");
  if (!categories.is_array()) schema_error("categories", "must be an array");
  std::vector<std::pair<int, std::string>> cats;
  for (std::size_t i = 0; i < categories.size(); ++i) {
    const std::string where = "categories[" + std::to_string(i) + "]";
    const json& cat = categories[i];
    cats.emplace_back(require_int(cat, "id", where),
                      require(cat, "name", where).get<std::string>());
  }
  std::sort(cats.begin(), cats.end());
  for (std::size_t i = 0; i < cats.size(); ++i) {
    if (cats[i].first != static_cast<int>(i)) {
      schema_error("categories", "ids must be dense 0..n-1");
    }
    dataset.class_names.push_back(cats[i].second);
  }

  const json& images = require(root, "images", "ground truth");
  if (!images.is_array()) schema_error("images", "must be an array");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string where = "images[" + std::to_string(i) + "]";
    const json& img = images[i];
    Frame frame;
    frame.id = require_int(img, "id", where);
    frame.dims.width = require_int(img, "width", where);
    frame.dims.height = require_int(img, "height", where);
    dataset.frames.push_back(std::move(frame));
  }
  std::sort(dataset.frames.begin(), dataset.frames.end(),
            [](const Frame& a, const Frame& b) { return a.id < b.id; });

  const json& annotations = require(root, "annotations", "ground truth");
  if (!annotations.is_array()) schema_error("annotations", "must be an array");
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const std::string where = "annotations[" + std::to_string(i) + "]";
    const json& ann = annotations[i];
    const int image_id = require_int(ann, "image_id", where);
    Frame* frame = nullptr;
    for (auto& f : dataset.frames) {
      if (f.id == image_id) {
        frame = &f;
        break;
      }
    }
    if (frame == nullptr) {
      throw Error(ErrorCode::UnknownImageId,
                  where + ": image " + std::to_string(image_id));
    }
    GroundTruthObject gt;
    gt.frame = image_id;
    gt.class_id = require_int(ann, "class_id", where);
    gt.box = parse_bbox(require(ann, "bbox", where), where);
    if (const auto mask_it = ann.find("mask"); mask_it != ann.end()) {
      if (!mask_it->is_array()) schema_error(where, "mask must be a run array");
      gt.segment = rle_decode(mask_it->get<std::vector<std::int64_t>>(),
                              frame->dims);
    } else if (gt.box.well_formed()) {
      gt.segment = PixelMask::filled_box(gt.box);
    }
    frame->objects.push_back(std::move(gt));
  }

  handle_violations(validate_dataset(dataset), violations);
  return dataset;
}

Dataset parse_ground_truth(const std::string& path,
                           std::vector<Violation>* violations) {
  return parse_ground_truth_json(load_json(path), violations);
}

namespace {

GaussianCorner parse_corner(const json& mean, const json& cov,
                            const std::string& where) {
  if (!mean.is_array() || mean.size() != 2) {
    schema_error(where, "mean must be [x,y]");
  }
  if (!cov.is_array() || cov.size() != 4) {
    schema_error(where, "covariance must be 4 row-major entries");
  }
  GaussianCorner corner;
  corner.mean_x = mean[0].get<double>();
  corner.mean_y = mean[1].get<double>();
  corner.var_x = cov[0].get<double>();
  corner.var_y = cov[3].get<double>();
  const double c01 = cov[1].get<double>();
  const double c10 = cov[2].get<double>();
  if (std::abs(c01 - c10) > 1e-9) {
    schema_error(where, "covariance must be symmetric");
  }
  corner.cov_xy = c01;
  return corner;
}

}  // namespace

DetectionsByFrame parse_detections_json(const json& root,
                                        const Dataset& dataset,
                                        std::vector<Violation>* violations) {
  if (!root.is_object()) schema_error("detections", "top level must be an object");
  const json& list = require(root, "detections", "detections");
  if (!list.is_array()) schema_error("detections", "must be an array");

  DetectionsByFrame out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = "detections[" + std::to_string(i) + "]";
    const json& entry = list[i];
    Detection det;
    det.frame = require_int(entry, "image_id", where);
    const std::string type = require(entry, "type", where).get<std::string>();
    if (type == "bbox") {
      det.geometry = parse_bbox(require(entry, "bbox", where), where);
    } else if (type == "pbox") {
      ProbabilisticBox pb;
      pb.top_left = parse_corner(require(entry, "tl_mean", where),
                                 require(entry, "tl_cov", where), where);
      pb.bottom_right = parse_corner(require(entry, "br_mean", where),
                                     require(entry, "br_cov", where), where);
      det.geometry = pb;
    } else {
      schema_error(where, "type must be 'bbox' or 'pbox'");
    }
    const json& probs = require(entry, "label_probs", where);
    if (!probs.is_array()) schema_error(where, "label_probs must be an array");
    det.label_dist = probs.get<std::vector<double>>();
    out[det.frame].push_back(std::move(det));
  }

  std::vector<Violation> found = validate_detections(out, dataset);
  // Non-PSD covariance has its own error code.
  if (violations == nullptr) {
    for (const auto& v : found) {
      if (v.kind == Violation::Kind::NonPSDCovariance) {
        throw Error(ErrorCode::NonPSDCovariance, v.to_string());
      }
    }
  }
  handle_violations(std::move(found), violations);
  return out;
}

DetectionsByFrame parse_detections(const std::string& path,
                                   const Dataset& dataset,
                                   std::vector<Violation>* violations) {
  return parse_detections_json(load_json(path), dataset, violations);
}

json dataset_to_json(const Dataset& dataset) {
  json images = json::array();
  json annotations = json::array();
  for (const auto& frame : dataset.frames) {
    images.push_back({{"id", frame.id},
                      {"width", frame.dims.width},
                      {"height", frame.dims.height}});
    for (const auto& gt : frame.objects) {
      json ann = {{"image_id", frame.id},
                  {"class_id", gt.class_id},
                  {"bbox", {gt.box.x0, gt.box.y0, gt.box.x1, gt.box.y1}}};
      // Box-filled segments round-trip through the box-fill rule; anything
      // else needs the explicit mask.
      if (gt.segment != PixelMask::filled_box(gt.box)) {
        ann["mask"] = rle_encode(gt.segment, frame.dims);
      }
      annotations.push_back(std::move(ann));
    }
  }
  json categories = json::array();
  for (std::size_t i = 0; i < dataset.class_names.size(); ++i) {
    categories.push_back(
        {{"id", static_cast<int>(i)}, {"name", dataset.class_names[i]}});
  }
  return {{"schema_version", 1},
          {"images", images},
          {"annotations", annotations},
          {"categories", categories}};
}

json detections_to_json(const DetectionsByFrame& detections,
                        std::int64_t clipped) {
  json list = json::array();
  for (const auto& [frame_id, dets] : detections) {
    for (const auto& det : dets) {
      json entry = {{"image_id", frame_id}, {"label_probs", det.label_dist}};
      if (const auto* box = det.as_box()) {
        entry["type"] = "bbox";
        entry["bbox"] = {box->x0, box->y0, box->x1, box->y1};
      } else {
        const auto& pb = std::get<ProbabilisticBox>(det.geometry);
        entry["type"] = "pbox";
        entry["tl_mean"] = {pb.top_left.mean_x, pb.top_left.mean_y};
        entry["tl_cov"] = {pb.top_left.var_x, pb.top_left.cov_xy,
                           pb.top_left.cov_xy, pb.top_left.var_y};
        entry["br_mean"] = {pb.bottom_right.mean_x, pb.bottom_right.mean_y};
        entry["br_cov"] = {pb.bottom_right.var_x, pb.bottom_right.cov_xy,
                           pb.bottom_right.cov_xy, pb.bottom_right.var_y};
      }
      list.push_back(std::move(entry));
    }
  }
  return {{"schema_version", 1},
          {"meta", {{"clipped_boxes", clipped}}},
          {"detections", list}};
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_ground_truth(const std::string& path, const Dataset& dataset) {
  write_text_file(path, dataset_to_json(dataset).dump(2) + "\n");
}

void write_detections(const std::string& path,
                      const DetectionsByFrame& detections,
                      std::int64_t clipped) {
  write_text_file(path, detections_to_json(detections, clipped).dump(2) + "\n");
}

json report_to_json(const EvaluationReport& report,
                    const MapResult* map_result, const Dataset& dataset) {
  json frames = json::array();
  for (const auto& fr : report.per_frame) {
    json pairs = json::array();
    for (const auto& pair : fr.assignment.pairs) {
      pairs.push_back({{"gt", pair.gt_index},
                       {"det", pair.det_index},
                       {"ppdq", pair.quality.ppdq},
                       {"sp", pair.quality.spatial},
                       {"lbl", pair.quality.label},
                       {"fg_loss", pair.quality.fg_loss},
                       {"bg_loss", pair.quality.bg_loss}});
    }
    frames.push_back({{"frame", fr.frame},
                      {"pairs", pairs},
                      {"fn_gt", fr.assignment.fn_gt},
                      {"fp_det", fr.assignment.fp_det}});
  }

  json out = {{"schema_version", 1},
              {"settings", {{"tau", report.tau}, {"weight", report.weight}}},
              {"pdq", report.pdq},
              {"ppdq", report.avg_ppdq},
              {"sp", report.avg_spatial},
              {"lbl", report.avg_label},
              {"fg", report.avg_fg_quality},
              {"bg", report.avg_bg_quality},
              {"tp", report.tp_total},
              {"fp", report.fp_total},
              {"fn", report.fn_total},
              {"vacuous", report.vacuous},
              // FG/BG are per-pair exp(-loss) first, then averaged.
              {"component_means", "per_pair_exp_then_mean"},
              {"frames", frames}};
  if (map_result != nullptr) {
    json per_class = json::array();
    for (std::size_t c = 0; c < map_result->per_class_ap.size(); ++c) {
      const double ap = map_result->per_class_ap[c];
      json entry = {{"class_id", static_cast<int>(c)}};
      if (c < dataset.class_names.size()) {
        entry["name"] = dataset.class_names[c];
      }
      if (std::isnan(ap)) {
        entry["ap"] = nullptr;
      } else {
        entry["ap"] = ap;
      }
      per_class.push_back(std::move(entry));
    }
    out["map"] = {{"map", map_result->map}, {"per_class", per_class}};
  }
  return out;
}

std::string report_table(const EvaluationReport& report,
                         const MapResult* map_result) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "PDQ     pPDQ    Sp      Lbl     FG      BG      TP      FP      FN";
  if (map_result) os << "      mAP";
  os << "\n";
  os << report.pdq << "  " << report.avg_ppdq << "  " << report.avg_spatial
     << "  " << report.avg_label << "  " << report.avg_fg_quality << "  "
     << report.avg_bg_quality << "  " << std::setw(6) << report.tp_total
     << "  " << std::setw(6) << report.fp_total << "  " << std::setw(6)
     << report.fn_total;
  if (map_result) os << "  " << map_result->map;
  os << "\n";
  if (report.vacuous) {
    os << "warning: no ground truths and no detections; PDQ reported as 1\n";
  }
  return os.str();
}

void write_sweep_csv(const std::string& path, const sim::SweepResult& sweep) {
  std::ostringstream os;
  os << "experiment,parameter,value,rep,pdq,map,avg_ppdq,avg_spatial,"
        "avg_label,avg_fg,avg_bg,tp,fp,fn\n";
  os << std::setprecision(17);
  for (const auto& row : sweep.rows) {
    os << sim::experiment_name(sweep.experiment) << ',' << sweep.param_name
       << ',' << row.param << ',' << row.rep << ',' << row.pdq << ',';
    if (!std::isnan(row.map)) os << row.map;
    os << ',' << row.avg_ppdq << ',' << row.avg_spatial << ',' << row.avg_label
       << ',' << row.avg_fg_quality << ',' << row.avg_bg_quality << ','
       << row.tp << ',' << row.fp << ',' << row.fn << '\n';
  }
  write_text_file(path, os.str());
}

}  // namespace pdq::io
