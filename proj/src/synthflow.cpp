#include "remora/synthflow.hpp"

#include <algorithm>
#include <cmath>

namespace remora {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Center {
  double cy;
  double cx;
};

Center resolve_center(const MotionSpec& spec, int height, int width) {
  double cy = spec.cy >= 0.0 ? spec.cy : (height - 1) / 2.0;
  double cx = spec.cx >= 0.0 ? spec.cx : (width - 1) / 2.0;
  return {cy, cx};
}

// Band-limited texture: a handful of random plane waves with wavelengths >= 8
// px, normalized per channel to [16, 240] (span 224 >= 128 gray levels).
Frame random_texture(int height, int width, std::uint64_t seed) {
  Frame frame(height, width);
  Rng rng(seed);
  std::vector<double> plane(static_cast<std::size_t>(height) * width);
  for (int c = 0; c < 3; ++c) {
    struct Wave {
      double fy, fx, phase, amp;
    };
    Wave waves[8];
    for (Wave& w : waves) {
      const double wavelength = rng.uniform(8.0, 32.0);
      const double angle = rng.uniform(0.0, 2.0 * kPi);
      w.fy = std::sin(angle) * 2.0 * kPi / wavelength;
      w.fx = std::cos(angle) * 2.0 * kPi / wavelength;
      w.phase = rng.uniform(0.0, 2.0 * kPi);
      w.amp = rng.uniform(0.5, 1.0);
    }
    double lo = 1e300, hi = -1e300;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double v = 0.0;
        for (const Wave& w : waves) v += w.amp * std::sin(w.fy * y + w.fx * x + w.phase);
        plane[static_cast<std::size_t>(y) * width + x] = v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    const double scale = hi > lo ? 224.0 / (hi - lo) : 0.0;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double v = plane[static_cast<std::size_t>(y) * width + x];
        frame.set(y, x, c, static_cast<std::uint8_t>(std::lround(16.0 + (v - lo) * scale)));
      }
    }
  }
  return frame;
}

// Source position in the previous frame for output pixel (y, x): the inverse
// of one motion step.
void inverse_warp_position(const MotionSpec& spec, const Center& c, double y, double x,
                           double* sy, double* sx) {
  switch (spec.kind) {
    case MotionKind::Translate:
      *sy = y - spec.ty;
      *sx = x - spec.tx;
      return;
    case MotionKind::Rotate: {
      const double oy = y - c.cy, ox = x - c.cx;
      const double cs = std::cos(spec.theta), sn = std::sin(spec.theta);
      *sy = c.cy + (-sn * ox + cs * oy);
      *sx = c.cx + (cs * ox + sn * oy);
      return;
    }
    case MotionKind::Zoom: {
      *sy = c.cy + (y - c.cy) / spec.scale;
      *sx = c.cx + (x - c.cx) / spec.scale;
      return;
    }
  }
  *sy = y;
  *sx = x;
}

}  // namespace

void validate_spec(const MotionSpec& spec) {
  switch (spec.kind) {
    case MotionKind::Translate:
      if (std::abs(spec.ty) > 4.0 || std::abs(spec.tx) > 4.0) {
        throw InvalidInputError("motion spec: |ty|,|tx| must be <= 4");
      }
      break;
    case MotionKind::Rotate:
      if (std::abs(spec.theta) > 0.2) throw InvalidInputError("motion spec: |theta| must be <= 0.2");
      break;
    case MotionKind::Zoom:
      if (spec.scale < 0.8 || spec.scale > 1.25) {
        throw InvalidInputError("motion spec: scale must be in [0.8, 1.25]");
      }
      break;
  }
}

double bilinear_sample(const Frame& f, double y, double x, int channel) {
  const double cy = std::clamp(y, 0.0, static_cast<double>(f.height - 1));
  const double cx = std::clamp(x, 0.0, static_cast<double>(f.width - 1));
  const int y0 = static_cast<int>(std::floor(cy));
  const int x0 = static_cast<int>(std::floor(cx));
  const int y1 = std::min(y0 + 1, f.height - 1);
  const int x1 = std::min(x0 + 1, f.width - 1);
  const double wy = cy - y0, wx = cx - x0;
  const double top = (1.0 - wx) * f.at(y0, x0, channel) + wx * f.at(y0, x1, channel);
  const double bot = (1.0 - wx) * f.at(y1, x0, channel) + wx * f.at(y1, x1, channel);
  return (1.0 - wy) * top + wy * bot;
}

DenseFlow analytic_flow(const MotionSpec& spec, int height, int width) {
  DenseFlow flow(height, width);
  const Center c = resolve_center(spec, height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double fy = 0.0, fx = 0.0;
      switch (spec.kind) {
        case MotionKind::Translate:
          fy = spec.ty;
          fx = spec.tx;
          break;
        case MotionKind::Rotate: {
          const double oy = y - c.cy, ox = x - c.cx;
          const double cs = std::cos(spec.theta), sn = std::sin(spec.theta);
          fy = (sn * ox + cs * oy) - oy;
          fx = (cs * ox - sn * oy) - ox;
          break;
        }
        case MotionKind::Zoom:
          fy = (spec.scale - 1.0) * (y - c.cy);
          fx = (spec.scale - 1.0) * (x - c.cx);
          break;
      }
      flow.set(y, x, fy, fx);
    }
  }
  return flow;
}

RenderResult render_clip(const MotionSpec& spec, int frame_count, int height, int width,
                         std::uint64_t texture_seed, int fps) {
  validate_spec(spec);
  if (frame_count < 1 || height < 1 || width < 1) {
    throw InvalidInputError("render_clip: degenerate dimensions");
  }

  RenderResult out;
  out.clip.fps = fps;
  out.clip.frames.push_back(random_texture(height, width, texture_seed));
  const Center c = resolve_center(spec, height, width);
  const DenseFlow step_flow = analytic_flow(spec, height, width);

  for (int t = 1; t < frame_count; ++t) {
    const Frame& prev = out.clip.frames.back();
    Frame next(height, width);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double sy, sx;
        inverse_warp_position(spec, c, y, x, &sy, &sx);
        for (int ch = 0; ch < 3; ++ch) {
          const double v = bilinear_sample(prev, sy, sx, ch);
          next.set(y, x, ch, static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0))));
        }
      }
    }
    out.clip.frames.push_back(std::move(next));
    out.flows.push_back(step_flow);
  }
  return out;
}

double endpoint_error(const DenseFlow& pred, const DenseFlow& truth) {
  if (!pred.same_shape(truth)) throw InvalidInputError("endpoint_error: shape mismatch");
  double acc = 0.0;
  const std::size_t pixels = static_cast<std::size_t>(pred.height) * pred.width;
  for (std::size_t i = 0; i < pixels; ++i) {
    const double dy = pred.v[i * 2] - truth.v[i * 2];
    const double dx = pred.v[i * 2 + 1] - truth.v[i * 2 + 1];
    acc += std::sqrt(dy * dy + dx * dx);
  }
  return acc / static_cast<double>(pixels);
}

}  // namespace remora
