#pragma once

#include <cstdint>
#include <vector>

#include "remora/common.hpp"

namespace remora {

// One H x W x 3 frame, 8-bit channels, row-major interleaved RGB.
struct Frame {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  Frame() = default;
  Frame(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, fill) {}

  std::uint8_t at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  void set(int y, int x, int c, std::uint8_t v) {
    data[(static_cast<std::size_t>(y) * width + x) * 3 + c] = v;
  }

  bool same_shape(const Frame& o) const { return height == o.height && width == o.width; }
};

struct VideoClip {
  std::vector<Frame> frames;
  int fps = 16;

  int frame_count() const { return static_cast<int>(frames.size()); }
  int height() const { return frames.empty() ? 0 : frames[0].height; }
  int width() const { return frames.empty() ? 0 : frames[0].width; }
};

// Per-pixel (dy, dx) flow in pixels per frame.
struct DenseFlow {
  int height = 0;
  int width = 0;
  std::vector<double> v;  // 2 per pixel: dy, dx

  DenseFlow() = default;
  DenseFlow(int h, int w) : height(h), width(w), v(static_cast<std::size_t>(h) * w * 2, 0.0) {}

  double dy(int y, int x) const { return v[(static_cast<std::size_t>(y) * width + x) * 2]; }
  double dx(int y, int x) const { return v[(static_cast<std::size_t>(y) * width + x) * 2 + 1]; }
  void set(int y, int x, double fy, double fx) {
    v[(static_cast<std::size_t>(y) * width + x) * 2] = fy;
    v[(static_cast<std::size_t>(y) * width + x) * 2 + 1] = fx;
  }

  bool same_shape(const DenseFlow& o) const { return height == o.height && width == o.width; }
};

}  // namespace remora
