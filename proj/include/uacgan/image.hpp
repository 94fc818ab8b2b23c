// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

// Minimal raster canvas and PNG output for plots and sample grids.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace uacgan {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
};

class RgbImage {
 public:
  RgbImage(int width, int height, Rgb background = {255, 255, 255});

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<std::uint8_t>& pixels() const { return pixels_; }

  // Out-of-bounds writes are ignored.
  void set(int x, int y, Rgb c);
  Rgb get(int x, int y) const;
  void fill_rect(int x0, int y0, int x1, int y1, Rgb c);
  void draw_line(double x0, double y0, double x1, double y1, Rgb c, int thickness = 1);
  // 5x7 glyphs for digits, upper-case letters and a little punctuation;
  // lower-case is drawn upper-case, anything else as a blank.
  void draw_text(int x, int y, std::string_view text, Rgb c, int scale = 1);

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;
};

int text_width(std::string_view text, int scale = 1);

/// 8-bit RGB PNG without timestamps, so equal images give equal bytes.
void write_png(const RgbImage& image, const std::filesystem::path& path);

struct Curve {
  std::span<const double> y;
  Rgb color;
  bool dashed = false;
};

/// Draws curves sampled on `xs` into the rectangle (x0, y0)-(x1, y1) with a
/// frame, x tick labels and a title. y runs from 0 to `y_max`.
void draw_curve_panel(RgbImage& image, int x0, int y0, int x1, int y1, std::span<const double> xs,
                      std::span<const Curve> curves, double y_max, std::string_view title);

}  // namespace uacgan
