#include "pdq/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pdq {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedJson: return "MalformedJson";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::RleLengthMismatch: return "RleLengthMismatch";
    case ErrorCode::UnknownImageId: return "UnknownImageId";
    case ErrorCode::UnknownFrame: return "UnknownFrame";
    case ErrorCode::NonPSDCovariance: return "NonPSDCovariance";
    case ErrorCode::ClassIndexOutOfRange: return "ClassIndexOutOfRange";
    case ErrorCode::NoGroundTruth: return "NoGroundTruth";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

std::pair<AxisAlignedBox, bool> intersect(const AxisAlignedBox& a,
                                          const AxisAlignedBox& b) {
  AxisAlignedBox r{std::max(a.x0, b.x0), std::max(a.y0, b.y0),
                   std::min(a.x1, b.x1), std::min(a.y1, b.y1)};
  return {r, r.well_formed()};
}

std::pair<AxisAlignedBox, bool> clip_to_image(const AxisAlignedBox& box,
                                              const ImageDims& dims) {
  return intersect(box, AxisAlignedBox{0, 0, dims.width - 1, dims.height - 1});
}

PixelMask PixelMask::filled_box(const AxisAlignedBox& box) {
  PixelMask m;
  if (!box.well_formed()) return m;
  m.x0_ = box.x0;
  m.y0_ = box.y0;
  m.w_ = box.width();
  m.h_ = box.height();
  m.bits_.assign(static_cast<std::size_t>(m.w_) * m.h_, 1);
  m.count_ = box.area();
  return m;
}

PixelMask PixelMask::from_pixels(const std::vector<std::pair<int, int>>& xy) {
  PixelMask m;
  if (xy.empty()) return m;
  int x0 = xy[0].first, x1 = xy[0].first;
  int y0 = xy[0].second, y1 = xy[0].second;
  for (const auto& [x, y] : xy) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  m.x0_ = x0;
  m.y0_ = y0;
  m.w_ = x1 - x0 + 1;
  m.h_ = y1 - y0 + 1;
  m.bits_.assign(static_cast<std::size_t>(m.w_) * m.h_, 0);
  for (const auto& [x, y] : xy) {
    std::uint8_t& cell =
        m.bits_[static_cast<std::size_t>(y - y0) * m.w_ + (x - x0)];
    if (!cell) {
      cell = 1;
      ++m.count_;
    }
  }
  return m;
}

PixelMask PixelMask::from_bitmap(int x0, int y0, int w, int h,
                                 std::vector<std::uint8_t> bits) {
  PixelMask m;
  if (w <= 0 || h <= 0) return m;
  m.x0_ = x0;
  m.y0_ = y0;
  m.w_ = w;
  m.h_ = h;
  m.bits_ = std::move(bits);
  m.bits_.resize(static_cast<std::size_t>(w) * h, 0);
  for (auto& b : m.bits_) {
    if (b) {
      b = 1;
      ++m.count_;
    }
  }
  return m;
}

AxisAlignedBox PixelMask::tight_box() const {
  AxisAlignedBox box{std::numeric_limits<int>::max(),
                     std::numeric_limits<int>::max(),
                     std::numeric_limits<int>::min(),
                     std::numeric_limits<int>::min()};
  for_each([&](int x, int y) {
    box.x0 = std::min(box.x0, x);
    box.x1 = std::max(box.x1, x);
    box.y0 = std::min(box.y0, y);
    box.y1 = std::max(box.y1, y);
  });
  return box;
}

bool PixelMask::operator==(const PixelMask& other) const {
  if (count_ != other.count_) return false;
  if (count_ == 0) return true;
  // Windows may differ; compare set pixels.
  bool equal = true;
  for_each([&](int x, int y) { equal = equal && other.contains(x, y); });
  return equal;
}

double GaussianCorner::min_eigenvalue() const {
  const double tr = var_x + var_y;
  const double diff = var_x - var_y;
  const double disc = std::sqrt(diff * diff + 4.0 * cov_xy * cov_xy);
  return 0.5 * (tr - disc);
}

int Detection::winning_class() const {
  int best = 0;
  for (int i = 1; i < static_cast<int>(label_dist.size()); ++i) {
    if (label_dist[i] > label_dist[best]) best = i;
  }
  return best;
}

double Detection::score() const {
  if (label_dist.empty()) return 0.0;
  return label_dist[winning_class()];
}

AxisAlignedBox Detection::mean_box() const {
  if (const auto* box = as_box()) return *box;
  const auto& pb = std::get<ProbabilisticBox>(geometry);
  AxisAlignedBox b{static_cast<int>(std::llround(pb.top_left.mean_x)),
                   static_cast<int>(std::llround(pb.top_left.mean_y)),
                   static_cast<int>(std::llround(pb.bottom_right.mean_x)),
                   static_cast<int>(std::llround(pb.bottom_right.mean_y))};
  return b;
}

const Frame* Dataset::find_frame(FrameId id) const {
  auto it = std::lower_bound(
      frames.begin(), frames.end(), id,
      [](const Frame& f, FrameId want) { return f.id < want; });
  if (it != frames.end() && it->id == id) return &*it;
  return nullptr;
}

std::int64_t Dataset::total_objects() const {
  std::int64_t n = 0;
  for (const auto& f : frames) n += static_cast<std::int64_t>(f.objects.size());
  return n;
}

const char* violation_kind_name(Violation::Kind kind) {
  using K = Violation::Kind;
  switch (kind) {
    case K::DuplicateFrame: return "DuplicateFrame";
    case K::BadImageDims: return "BadImageDims";
    case K::BoxIllFormed: return "BoxIllFormed";
    case K::BoxOutOfBounds: return "BoxOutOfBounds";
    case K::EmptySegment: return "EmptySegment";
    case K::SegmentOutsideBox: return "SegmentOutsideBox";
    case K::ClassIndexOutOfRange: return "ClassIndexOutOfRange";
    case K::LabelDistSizeMismatch: return "LabelDistSizeMismatch";
    case K::LabelProbOutOfRange: return "LabelProbOutOfRange";
    case K::LabelDistNotNormalized: return "LabelDistNotNormalized";
    case K::CornerOrderInvalid: return "CornerOrderInvalid";
    case K::NonPSDCovariance: return "NonPSDCovariance";
    case K::UnknownFrame: return "UnknownFrame";
  }
  return "Unknown";
}

std::string Violation::to_string() const {
  std::ostringstream os;
  os << violation_kind_name(kind);
  if (frame >= 0) os << " frame=" << frame;
  if (object >= 0) os << " object=" << object;
  if (!detail.empty()) os << ": " << detail;
  return os.str();
}

namespace {

constexpr double kLabelSumTolerance = 1e-6;
constexpr double kPsdTolerance = 1e-9;

void check_label_dist(const Detection& det, FrameId frame, int index,
                      std::size_t n_classes, std::vector<Violation>& out) {
  if (det.label_dist.size() != n_classes) {
    out.push_back({Violation::Kind::LabelDistSizeMismatch, frame, index,
                   "expected " + std::to_string(n_classes) + " entries, got " +
                       std::to_string(det.label_dist.size())});
    return;
  }
  double sum = 0.0;
  for (double p : det.label_dist) {
    if (p < 0.0 || p > 1.0) {
      out.push_back({Violation::Kind::LabelProbOutOfRange, frame, index,
                     "probability " + std::to_string(p)});
      return;
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kLabelSumTolerance) {
    out.push_back({Violation::Kind::LabelDistNotNormalized, frame, index,
                   "sum " + std::to_string(sum)});
  }
}

}  // namespace

std::vector<Violation> validate_dataset(const Dataset& dataset) {
  std::vector<Violation> out;
  const int n_classes = static_cast<int>(dataset.class_names.size());

  for (std::size_t i = 0; i + 1 < dataset.frames.size(); ++i) {
    if (dataset.frames[i].id == dataset.frames[i + 1].id) {
      out.push_back({Violation::Kind::DuplicateFrame, dataset.frames[i].id, -1,
                     "frame id appears more than once"});
    }
  }

  for (const auto& frame : dataset.frames) {
    if (frame.dims.width < 1 || frame.dims.height < 1) {
      out.push_back({Violation::Kind::BadImageDims, frame.id, -1,
                     std::to_string(frame.dims.width) + "x" +
                         std::to_string(frame.dims.height)});
      continue;
    }
    const AxisAlignedBox image{0, 0, frame.dims.width - 1,
                               frame.dims.height - 1};
    for (int i = 0; i < static_cast<int>(frame.objects.size()); ++i) {
      const auto& gt = frame.objects[i];
      if (!gt.box.well_formed()) {
        out.push_back({Violation::Kind::BoxIllFormed, frame.id, i, ""});
        continue;
      }
      if (!image.contains(gt.box)) {
        out.push_back({Violation::Kind::BoxOutOfBounds, frame.id, i, ""});
      }
      if (gt.segment.empty()) {
        out.push_back({Violation::Kind::EmptySegment, frame.id, i, ""});
      } else if (!gt.box.contains(gt.segment.tight_box())) {
        out.push_back({Violation::Kind::SegmentOutsideBox, frame.id, i, ""});
      }
      if (gt.class_id < 0 || gt.class_id >= n_classes) {
        out.push_back({Violation::Kind::ClassIndexOutOfRange, frame.id, i,
                       "class " + std::to_string(gt.class_id)});
      }
    }
  }
  return out;
}

std::vector<Violation> validate_detections(const DetectionsByFrame& detections,
                                           const Dataset& dataset) {
  std::vector<Violation> out;
  for (const auto& [frame_id, dets] : detections) {
    if (dataset.find_frame(frame_id) == nullptr) {
      out.push_back({Violation::Kind::UnknownFrame, frame_id, -1, ""});
    }
    for (int i = 0; i < static_cast<int>(dets.size()); ++i) {
      const auto& det = dets[i];
      check_label_dist(det, frame_id, i, dataset.class_names.size(), out);
      if (const auto* box = det.as_box()) {
        if (!box->well_formed()) {
          out.push_back({Violation::Kind::BoxIllFormed, frame_id, i, ""});
        }
      } else {
        const auto& pb = std::get<ProbabilisticBox>(det.geometry);
        if (!pb.ordered()) {
          out.push_back({Violation::Kind::CornerOrderInvalid, frame_id, i, ""});
        }
        for (const auto* corner : {&pb.top_left, &pb.bottom_right}) {
          if (!corner->is_psd(kPsdTolerance)) {
            out.push_back({Violation::Kind::NonPSDCovariance, frame_id, i,
                           "min eigenvalue " +
                               std::to_string(corner->min_eigenvalue())});
          }
        }
      }
    }
  }
  return out;
}

}  // namespace pdq
