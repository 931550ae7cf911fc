#include "pdq/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace pdq::render {

namespace {

constexpr Color kCanvas{40, 40, 40};
constexpr Color kText{245, 245, 245};

// 5x7 bitmap glyphs (5 bits per row, MSB left) for the caption characters.
struct Glyph {
  char ch;
  std::uint8_t rows[7];
};

constexpr Glyph kGlyphs[] = {
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
    {'p', {0x00, 0x00, 0x1E, 0x11, 0x1E, 0x10, 0x10}},
    {'s', {0x00, 0x00, 0x0F, 0x10, 0x0E, 0x01, 0x1E}},
    {'l', {0x0C, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
};

const Glyph* find_glyph(char ch) {
  for (const auto& g : kGlyphs) {
    if (g.ch == ch) return &g;
  }
  return nullptr;
}

void draw_text(RgbImage& image, int x, int y, const std::string& text,
               Color color) {
  int cx = x;
  for (char ch : text) {
    if (const Glyph* g = find_glyph(ch)) {
      for (int row = 0; row < 7; ++row) {
        for (int col = 0; col < 5; ++col) {
          if (g->rows[row] & (0x10 >> col)) {
            image.set(cx + col, y + row, color);
          }
        }
      }
    }
    cx += 6;
  }
}

void draw_box(RgbImage& image, const AxisAlignedBox& box, Color color) {
  for (int x = box.x0; x <= box.x1; ++x) {
    image.set(x, box.y0, color);
    image.set(x, box.y1, color);
  }
  for (int y = box.y0; y <= box.y1; ++y) {
    image.set(box.x0, y, color);
    image.set(box.x1, y, color);
  }
}

Color blend(Color base, Color over, double alpha) {
  auto mix = [&](std::uint8_t a, std::uint8_t b) {
    return static_cast<std::uint8_t>(a * (1.0 - alpha) + b * alpha);
  };
  return {mix(base.r, over.r), mix(base.g, over.g), mix(base.b, over.b)};
}

void fill_mask(RgbImage& image, const PixelMask& mask, Color color,
               double alpha) {
  mask.for_each([&](int x, int y) {
    if (x >= 0 && y >= 0 && x < image.width && y < image.height) {
      image.set(x, y, blend(image.at(x, y), color, alpha));
    }
  });
}

void draw_line(RgbImage& image, double x0, double y0, double x1, double y1,
               Color color) {
  const double dx = x1 - x0;
  const double dy = y1 - y0;
  const int steps =
      std::max(1, static_cast<int>(std::ceil(std::max(std::abs(dx),
                                                      std::abs(dy)))));
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    image.set(static_cast<int>(std::lround(x0 + dx * t)),
              static_cast<int>(std::lround(y0 + dy * t)), color);
  }
}

void draw_corner_ellipses(RgbImage& image, const GaussianCorner& corner,
                          Color color) {
  // Principal axes of the 2x2 covariance.
  const double tr = corner.var_x + corner.var_y;
  const double diff = corner.var_x - corner.var_y;
  const double disc = std::sqrt(diff * diff + 4.0 * corner.cov_xy * corner.cov_xy);
  const double l1 = std::max(0.0, 0.5 * (tr + disc));
  const double l2 = std::max(0.0, 0.5 * (tr - disc));
  double e1x = 1.0, e1y = 0.0;
  if (corner.cov_xy != 0.0) {
    e1x = l1 - corner.var_y;
    e1y = corner.cov_xy;
    const double n = std::hypot(e1x, e1y);
    e1x /= n;
    e1y /= n;
  } else if (corner.var_y > corner.var_x) {
    e1x = 0.0;
    e1y = 1.0;
  }
  const double e2x = -e1y, e2y = e1x;
  const double a = std::sqrt(l1), b = std::sqrt(l2);
  for (int k = 1; k <= 3; ++k) {
    const int samples = 96;
    double px = 0, py = 0;
    for (int s = 0; s <= samples; ++s) {
      const double t = 2.0 * 3.14159265358979323846 * s / samples;
      const double u = k * a * std::cos(t);
      const double v = k * b * std::sin(t);
      const double x = corner.mean_x + u * e1x + v * e2x;
      const double y = corner.mean_y + u * e1y + v * e2y;
      if (s > 0) draw_line(image, px, py, x, y, color);
      px = x;
      py = y;
    }
  }
}

std::string quality_caption(const PairQuality& q) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "p:%.2f s:%.2f l:%.2f", q.ppdq, q.spatial,
                q.label);
  return buf;
}

}  // namespace

GrayImage heatmap(const ProbabilityMap& pmap) {
  GrayImage image;
  image.width = pmap.dims().width;
  image.height = pmap.dims().height;
  image.pixels.assign(
      static_cast<std::size_t>(image.width) * image.height, 0);
  pmap.for_each_support([&](int x, int y, double p) {
    image.pixels[static_cast<std::size_t>(y) * image.width + x] =
        static_cast<std::uint8_t>(std::lround(255.0 * p));
  });
  return image;
}

RgbImage overlay(const Frame& frame, const std::vector<Detection>& dets,
                 const FrameAssignment& assignment) {
  RgbImage image;
  image.width = frame.dims.width;
  image.height = frame.dims.height;
  image.pixels.assign(
      static_cast<std::size_t>(image.width) * image.height, kCanvas);

  for (int gi : assignment.fn_gt) {
    fill_mask(image, frame.objects[gi].segment, kFalseOrange, 0.6);
  }
  for (const auto& pair : assignment.pairs) {
    fill_mask(image, frame.objects[pair.gt_index].segment, kTrueBlue, 0.5);
  }
  for (int dj : assignment.fp_det) {
    draw_box(image, dets[dj].mean_box(), kFalseOrange);
    if (const auto* pb = dets[dj].as_pbox()) {
      draw_corner_ellipses(image, pb->top_left, kEllipseYellow);
      draw_corner_ellipses(image, pb->bottom_right, kEllipseYellow);
    }
  }
  for (const auto& pair : assignment.pairs) {
    const Detection& det = dets[pair.det_index];
    const AxisAlignedBox box = det.mean_box();
    draw_box(image, box, kTrueBlue);
    if (const auto* pb = det.as_pbox()) {
      draw_corner_ellipses(image, pb->top_left, kEllipseYellow);
      draw_corner_ellipses(image, pb->bottom_right, kEllipseYellow);
    }
    draw_text(image, box.x0 + 2, std::max(0, box.y0 - 9),
              quality_caption(pair.quality), kText);
  }
  return image;
}

RgbImage sweep_plot(const sim::SweepResult& sweep) {
  const int width = 640, height = 400, margin = 40;
  RgbImage image;
  image.width = width;
  image.height = height;
  image.pixels.assign(static_cast<std::size_t>(width) * height,
                      Color{255, 255, 255});

  const Color axis{0, 0, 0};
  draw_line(image, margin, height - margin, width - margin, height - margin,
            axis);
  draw_line(image, margin, margin, margin, height - margin, axis);

  const auto values = sweep.grid_values();
  if (values.empty()) return image;
  const double lo = *std::min_element(values.begin(), values.end());
  const double hi = *std::max_element(values.begin(), values.end());
  const double span = hi > lo ? hi - lo : 1.0;
  auto px = [&](double v) {
    return margin + (v - lo) / span * (width - 2.0 * margin);
  };
  auto py = [&](double y) {
    return height - margin - std::clamp(y, 0.0, 1.0) * (height - 2.0 * margin);
  };

  auto draw_series = [&](const std::vector<double>& ys, Color color) {
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      if (std::isnan(ys[i]) || std::isnan(ys[i + 1])) continue;
      draw_line(image, px(values[i]), py(ys[i]), px(values[i + 1]),
                py(ys[i + 1]), color);
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (std::isnan(ys[i])) continue;
      const int cx = static_cast<int>(px(values[i]));
      const int cy = static_cast<int>(py(ys[i]));
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) image.set(cx + dx, cy + dy, color);
    }
  };
  draw_series(sweep.mean_pdq_per_value(), kTrueBlue);
  draw_series(sweep.mean_map_per_value(), kFalseOrange);
  return image;
}

void write_pgm(const std::string& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

void write_ppm(const std::string& path, const RgbImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  for (const auto& c : image.pixels) {
    const char rgb[3] = {static_cast<char>(c.r), static_cast<char>(c.g),
                         static_cast<char>(c.b)};
    out.write(rgb, 3);
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

}  // namespace pdq::render
