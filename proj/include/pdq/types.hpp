#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace pdq {

using FrameId = int;

enum class ErrorCode {
  MalformedJson,
  SchemaViolation,
  RleLengthMismatch,
  UnknownImageId,
  UnknownFrame,
  NonPSDCovariance,
  ClassIndexOutOfRange,
  NoGroundTruth,
  InvalidGrid,
  IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct ImageDims {
  int width = 0;
  int height = 0;

  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height;
  }
  std::int64_t area() const {
    return static_cast<std::int64_t>(width) * height;
  }
};

/// Axis-aligned box over integer pixels; [x0,y0,x1,y1] covers columns x0..x1
/// and rows y0..y1 inclusive. Origin (0,0) is the top-left pixel.
struct AxisAlignedBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  bool well_formed() const { return x0 <= x1 && y0 <= y1; }
  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  std::int64_t area() const {
    return static_cast<std::int64_t>(width()) * height();
  }
  bool contains(int x, int y) const {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
  bool contains(const AxisAlignedBox& other) const {
    return other.x0 >= x0 && other.x1 <= x1 && other.y0 >= y0 && other.y1 <= y1;
  }
  bool operator==(const AxisAlignedBox& other) const = default;
};

/// Intersection of two boxes; empty result reported via the bool.
std::pair<AxisAlignedBox, bool> intersect(const AxisAlignedBox& a,
                                          const AxisAlignedBox& b);

/// Box clipped to image bounds; false if nothing remains.
std::pair<AxisAlignedBox, bool> clip_to_image(const AxisAlignedBox& box,
                                              const ImageDims& dims);

/// A set of pixels stored as a byte mask over a local window. The window is
/// independent of any enclosing box so that out-of-box pixels are
/// representable (the validator reports them).
class PixelMask {
 public:
  PixelMask() = default;

  static PixelMask filled_box(const AxisAlignedBox& box);
  static PixelMask from_pixels(const std::vector<std::pair<int, int>>& xy);
  /// Window at (x0,y0) of size w*h with row-major bytes (non-zero = set).
  static PixelMask from_bitmap(int x0, int y0, int w, int h,
                               std::vector<std::uint8_t> bits);

  bool contains(int x, int y) const {
    if (x < x0_ || y < y0_ || x >= x0_ + w_ || y >= y0_ + h_) return false;
    return bits_[static_cast<std::size_t>(y - y0_) * w_ + (x - x0_)] != 0;
  }
  std::int64_t count() const { return count_; }
  bool empty() const { return count_ == 0; }

  /// Bounding box of the set pixels; only valid when non-empty.
  AxisAlignedBox tight_box() const;

  template <class F>
  void for_each(F&& f) const {
    for (int y = 0; y < h_; ++y) {
      const std::uint8_t* row = bits_.data() + static_cast<std::size_t>(y) * w_;
      for (int x = 0; x < w_; ++x) {
        if (row[x]) f(x0_ + x, y0_ + y);
      }
    }
  }

  bool operator==(const PixelMask& other) const;

 private:
  int x0_ = 0, y0_ = 0, w_ = 0, h_ = 0;
  std::vector<std::uint8_t> bits_;
  std::int64_t count_ = 0;
};

/// 2D Gaussian over pixel coordinates; covariance stored as the symmetric
/// triple (var_x, cov_xy, var_y).
struct GaussianCorner {
  double mean_x = 0.0;
  double mean_y = 0.0;
  double var_x = 0.0;
  double cov_xy = 0.0;
  double var_y = 0.0;

  double min_eigenvalue() const;
  bool is_psd(double tol = 1e-9) const { return min_eigenvalue() >= -tol; }
  bool operator==(const GaussianCorner& other) const = default;
};

/// Box whose top-left and bottom-right corners are Gaussian-distributed.
struct ProbabilisticBox {
  GaussianCorner top_left;
  GaussianCorner bottom_right;

  bool ordered() const {
    return top_left.mean_x <= bottom_right.mean_x &&
           top_left.mean_y <= bottom_right.mean_y;
  }
  bool operator==(const ProbabilisticBox& other) const = default;
};

using DetectionGeometry = std::variant<AxisAlignedBox, ProbabilisticBox>;

struct Detection {
  FrameId frame = 0;
  DetectionGeometry geometry;
  std::vector<double> label_dist;

  bool is_probabilistic() const {
    return std::holds_alternative<ProbabilisticBox>(geometry);
  }
  const AxisAlignedBox* as_box() const {
    return std::get_if<AxisAlignedBox>(&geometry);
  }
  const ProbabilisticBox* as_pbox() const {
    return std::get_if<ProbabilisticBox>(&geometry);
  }

  /// Winning class: argmax of label_dist, ties resolved to the lowest index.
  int winning_class() const;
  /// Winning-class probability, recomputed from label_dist.
  double score() const;
  /// Integer box for IoU-based matching: the box itself, or the rounded
  /// corner means of a probabilistic box.
  AxisAlignedBox mean_box() const;

  bool operator==(const Detection& other) const = default;
};

struct GroundTruthObject {
  FrameId frame = 0;
  PixelMask segment;
  AxisAlignedBox box;
  int class_id = 0;
};

struct Frame {
  FrameId id = 0;
  ImageDims dims;
  std::vector<GroundTruthObject> objects;
};

struct Dataset {
  std::vector<Frame> frames;  // ascending id
  std::vector<std::string> class_names;

  const Frame* find_frame(FrameId id) const;
  std::int64_t total_objects() const;
};

using DetectionsByFrame = std::map<FrameId, std::vector<Detection>>;

struct Violation {
  enum class Kind {
    DuplicateFrame,
    BadImageDims,
    BoxIllFormed,
    BoxOutOfBounds,
    EmptySegment,
    SegmentOutsideBox,
    ClassIndexOutOfRange,
    LabelDistSizeMismatch,
    LabelProbOutOfRange,
    LabelDistNotNormalized,
    CornerOrderInvalid,
    NonPSDCovariance,
    UnknownFrame,
  };

  Kind kind;
  FrameId frame = -1;  // -1 when not frame-specific
  int object = -1;     // annotation/detection index within the frame, -1 n/a
  std::string detail;

  std::string to_string() const;
};

const char* violation_kind_name(Violation::Kind kind);

/// Pure invariant check; violations are data, not errors.
std::vector<Violation> validate_dataset(const Dataset& dataset);
std::vector<Violation> validate_detections(const DetectionsByFrame& detections,
                                           const Dataset& dataset);

}  // namespace pdq
