#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pdq/assign.hpp"
#include "pdq/sim.hpp"
#include "pdq/spatial.hpp"
#include "pdq/types.hpp"

namespace pdq::render {

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  std::uint8_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
};

struct Color {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Color&) const = default;
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<Color> pixels;

  Color at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  void set(int x, int y, Color c) {
    if (x >= 0 && y >= 0 && x < width && y < height) {
      pixels[static_cast<std::size_t>(y) * width + x] = c;
    }
  }
};

inline constexpr Color kTrueBlue{60, 110, 230};
inline constexpr Color kFalseOrange{235, 140, 40};
inline constexpr Color kEllipseYellow{250, 220, 60};

/// Grayscale rendering of a probability map: pixel value = round(255 * p),
/// zero off the support.
GrayImage heatmap(const ProbabilityMap& pmap);

/// Assignment overlay: true positives as blue masks and boxes with a
/// (pPDQ, spatial, label) caption, false positives as orange boxes, false
/// negatives as orange masks. Probabilistic detections additionally get
/// corner ellipses at 1, 2 and 3 standard deviations.
RgbImage overlay(const Frame& frame, const std::vector<Detection>& dets,
                 const FrameAssignment& assignment);

/// Simple line plot of the per-grid-value mean PDQ (blue) and mAP (orange)
/// of a sweep.
RgbImage sweep_plot(const sim::SweepResult& sweep);

void write_pgm(const std::string& path, const GrayImage& image);
void write_ppm(const std::string& path, const RgbImage& image);

}  // namespace pdq::render
