#pragma once

#include <cstdint>
#include <vector>

#include "remora/video.hpp"

namespace remora {

enum class MotionKind { Translate, Rotate, Zoom };

struct MotionSpec {
  MotionKind kind = MotionKind::Translate;
  double ty = 0.0;     // translate, px/frame
  double tx = 0.0;
  double theta = 0.0;  // rotate, rad/frame
  double scale = 1.0;  // zoom factor per frame
  double cy = -1.0;    // center; negative = frame center
  double cx = -1.0;
};

// Throws InvalidInputError when the motion parameters leave the well-sampled
// regime (|ty|,|tx| <= 4, |theta| <= 0.2, scale in [0.8, 1.25]).
void validate_spec(const MotionSpec& spec);

struct RenderResult {
  VideoClip clip;
  std::vector<DenseFlow> flows;  // T-1 entries, entry t is flow frame t-1 -> t
};

// Frame 0 is a band-limited random texture (per-channel span >= 128 gray
// levels); each later frame is the previous one warped by the spec's motion
// via bilinear sampling with edge clamping. Bit-deterministic per
// (spec, dims, seed).
RenderResult render_clip(const MotionSpec& spec, int frame_count, int height, int width,
                         std::uint64_t texture_seed, int fps = 16);

// The exact analytic flow of one motion step; position-dependent only, so the
// same field applies between every consecutive frame pair.
DenseFlow analytic_flow(const MotionSpec& spec, int height, int width);

// Average endpoint error: mean Euclidean norm of the per-pixel difference.
double endpoint_error(const DenseFlow& pred, const DenseFlow& truth);

// Bilinear sample with edge clamp; shared by the renderer and tests.
double bilinear_sample(const Frame& f, double y, double x, int channel);

}  // namespace remora
