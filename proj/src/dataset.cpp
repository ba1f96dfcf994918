#include "remora/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "remora/codec.hpp"

namespace remora {

MotionSpec random_safe_spec(Rng& rng) { return random_safe_spec_of_kind(rng.uniform_int(0, 2), rng); }

MotionSpec random_safe_spec_of_kind(int kind_index, Rng& rng) {
  MotionSpec spec;
  switch (kind_index % 3) {
    case 0:
      spec.kind = MotionKind::Translate;
      spec.ty = rng.uniform(-2.5, 2.5);
      spec.tx = rng.uniform(-2.5, 2.5);
      break;
    case 1:
      spec.kind = MotionKind::Rotate;
      spec.theta = rng.uniform(-0.06, 0.06);
      break;
    default:
      spec.kind = MotionKind::Zoom;
      spec.scale = rng.uniform(0.94, 1.06);
      break;
  }
  return spec;
}

std::vector<FlowSample> make_flow_dataset(const PipelineConfig& cfg, std::uint64_t seed,
                                          int clips, int frames_per_clip) {
  if (clips < 1 || frames_per_clip < 2) {
    throw InvalidInputError("make_flow_dataset: need at least one clip of two frames");
  }
  Rng rng(seed);
  std::vector<FlowSample> samples;
  for (int c = 0; c < clips; ++c) {
    // cycle kinds so every dataset is balanced across translate/rotate/zoom
    const MotionSpec spec = random_safe_spec_of_kind(c, rng);
    const std::uint64_t texture_seed = rng.next_u64();
    const RenderResult rr =
        render_clip(spec, frames_per_clip, cfg.height, cfg.width, texture_seed, cfg.fps);
    for (int t = 1; t < frames_per_clip; ++t) {
      MotionField mv = block_match(rr.clip.frames[t], rr.clip.frames[t - 1], cfg.block_h,
                                   cfg.block_w, cfg.search_range);
      samples.emplace_back(std::move(mv), rr.flows[t - 1]);
    }
  }
  return samples;
}

GopStream make_demo_stream(const PipelineConfig& cfg, std::uint64_t seed, int gops,
                           int frames_per_gop) {
  if (gops < 1 || frames_per_gop < 1 || frames_per_gop > cfg.max_gop_len) {
    throw InvalidInputError("make_demo_stream: bad shape request");
  }
  Rng rng(seed);
  VideoClip clip;
  clip.fps = cfg.fps;
  for (int g = 0; g < gops; ++g) {
    const MotionSpec spec = random_safe_spec(rng);
    RenderResult rr = render_clip(spec, frames_per_gop, cfg.height, cfg.width, rng.next_u64(),
                                  cfg.fps);
    // Darken every other scene so consecutive scenes always read as hard cuts.
    if (g % 2 == 1) {
      for (Frame& f : rr.clip.frames) {
        for (std::uint8_t& v : f.data) v = static_cast<std::uint8_t>(v / 8);
      }
    }
    for (Frame& f : rr.clip.frames) clip.frames.push_back(std::move(f));
  }
  GopStream stream = compress_clip(clip, cfg.codec());
  if (stream.gop_count() != gops) {
    throw NumericError("make_demo_stream: scene cuts did not land on scene boundaries");
  }
  return stream;
}

}  // namespace remora
