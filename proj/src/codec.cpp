#include "remora/codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>

namespace remora {

namespace {

void check_block_divisibility(const Frame& f, int block_h, int block_w) {
  if (block_h < 1 || block_w < 1) throw InvalidConfigError("block size must be positive");
  if (f.height % block_h != 0 || f.width % block_w != 0) {
    throw InvalidInputError("frame dimensions not divisible by block size");
  }
}

// Normalized mean absolute difference between two frames, in [0, 1].
double frame_difference(const Frame& a, const Frame& b) {
  long long acc = 0;
  const std::size_t n = a.data.size();
  for (std::size_t i = 0; i < n; ++i) {
    acc += std::abs(static_cast<int>(a.data[i]) - static_cast<int>(b.data[i]));
  }
  return static_cast<double>(acc) / (255.0 * static_cast<double>(n));
}

long long block_sad(const Frame& cur, int cy, int cx, const Frame& ref, int ry, int rx,
                    int block_h, int block_w) {
  long long sad = 0;
  for (int y = 0; y < block_h; ++y) {
    const std::uint8_t* cp = cur.data.data() + (static_cast<std::size_t>(cy + y) * cur.width + cx) * 3;
    const std::uint8_t* rp = ref.data.data() + (static_cast<std::size_t>(ry + y) * ref.width + rx) * 3;
    for (int i = 0; i < block_w * 3; ++i) {
      sad += std::abs(static_cast<int>(cp[i]) - static_cast<int>(rp[i]));
    }
  }
  return sad;
}

std::int16_t quantize_component(int diff, int q) {
  if (q <= 1) return static_cast<std::int16_t>(diff);
  double r = std::round(static_cast<double>(diff) / q) * q;
  r = std::clamp(r, -255.0, 255.0);
  return static_cast<std::int16_t>(r);
}

}  // namespace

std::vector<int> detect_scene_cuts(const VideoClip& clip, double threshold) {
  if (clip.frames.empty()) throw InvalidInputError("detect_scene_cuts: empty clip");
  std::vector<int> cuts;
  for (int i = 1; i < clip.frame_count(); ++i) {
    if (!clip.frames[i].same_shape(clip.frames[i - 1])) {
      throw InvalidInputError("detect_scene_cuts: inconsistent frame shapes");
    }
    if (frame_difference(clip.frames[i], clip.frames[i - 1]) > threshold) cuts.push_back(i);
  }
  return cuts;
}

std::vector<std::pair<int, int>> segment_gops(int frame_count, const std::vector<int>& cuts,
                                              int max_gop_len) {
  if (max_gop_len < 1) throw InvalidConfigError("segment_gops: max_gop_len < 1");
  if (frame_count < 1) throw InvalidInputError("segment_gops: empty clip");
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    if (cuts[i] <= 0 || cuts[i] >= frame_count || (i > 0 && cuts[i] <= cuts[i - 1])) {
      throw InvalidInputError("segment_gops: cuts must be sorted and inside (0, T)");
    }
  }

  std::vector<std::pair<int, int>> segments;
  std::size_t next_cut = 0;
  int start = 0;
  while (start < frame_count) {
    int end = frame_count;
    if (next_cut < cuts.size()) end = cuts[next_cut];
    int len = std::min(end - start, max_gop_len);
    segments.emplace_back(start, len);
    start += len;
    if (next_cut < cuts.size() && start == cuts[next_cut]) ++next_cut;
  }
  return segments;
}

MotionField block_match(const Frame& current, const Frame& reference, int block_h, int block_w,
                        int search_range) {
  if (!current.same_shape(reference)) throw InvalidInputError("block_match: shape mismatch");
  check_block_divisibility(current, block_h, block_w);
  if (search_range < 0) throw InvalidConfigError("block_match: negative search range");

  const int grid_h = current.height / block_h;
  const int grid_w = current.width / block_w;
  MotionField mv(grid_h, grid_w, block_h, block_w);

#pragma omp parallel for collapse(2) schedule(static)
  for (int u = 0; u < grid_h; ++u) {
    for (int w = 0; w < grid_w; ++w) {
      const int cy = u * block_h;
      const int cx = w * block_w;
      long long best_sad = -1;
      int best_manh = 0, best_dy = 0, best_dx = 0;
      for (int dy = -search_range; dy <= search_range; ++dy) {
        const int ry = cy + dy;
        if (ry < 0 || ry + block_h > current.height) continue;
        for (int dx = -search_range; dx <= search_range; ++dx) {
          const int rx = cx + dx;
          if (rx < 0 || rx + block_w > current.width) continue;
          const long long sad = block_sad(current, cy, cx, reference, ry, rx, block_h, block_w);
          const int manh = std::abs(dy) + std::abs(dx);
          const bool better =
              best_sad < 0 || sad < best_sad ||
              (sad == best_sad &&
               (manh < best_manh ||
                (manh == best_manh && (dy < best_dy || (dy == best_dy && dx < best_dx)))));
          if (better) {
            best_sad = sad;
            best_manh = manh;
            best_dy = dy;
            best_dx = dx;
          }
        }
      }
      mv.set(u, w, static_cast<std::int16_t>(best_dy), static_cast<std::int16_t>(best_dx));
    }
  }
  return mv;
}

Frame motion_compensate(const Frame& reference, const MotionField& mv) {
  if (reference.height != mv.grid_h * mv.block_h || reference.width != mv.grid_w * mv.block_w) {
    throw InvalidInputError("motion_compensate: motion field does not tile the frame");
  }
  Frame out(reference.height, reference.width);
  for (int u = 0; u < mv.grid_h; ++u) {
    for (int w = 0; w < mv.grid_w; ++w) {
      const int ry = u * mv.block_h + mv.dy(u, w);
      const int rx = w * mv.block_w + mv.dx(u, w);
      if (ry < 0 || rx < 0 || ry + mv.block_h > reference.height ||
          rx + mv.block_w > reference.width) {
        throw InvalidInputError("motion_compensate: displacement leaves the reference frame");
      }
      for (int y = 0; y < mv.block_h; ++y) {
        const std::uint8_t* src =
            reference.data.data() + (static_cast<std::size_t>(ry + y) * reference.width + rx) * 3;
        std::uint8_t* dst =
            out.data.data() +
            (static_cast<std::size_t>(u * mv.block_h + y) * out.width + w * mv.block_w) * 3;
        std::copy(src, src + mv.block_w * 3, dst);
      }
    }
  }
  return out;
}

Gop encode_gop(std::span<const Frame> frames, const CodecConfig& cfg) {
  if (frames.empty()) throw InvalidInputError("encode_gop: no frames");
  if (static_cast<int>(frames.size()) > cfg.max_gop_len) {
    throw InvalidInputError("encode_gop: segment exceeds max_gop_len");
  }
  check_block_divisibility(frames[0], cfg.block_h, cfg.block_w);

  Gop gop;
  gop.iframe = frames[0];
  Frame recon = frames[0];
  for (std::size_t t = 1; t < frames.size(); ++t) {
    if (!frames[t].same_shape(frames[0])) throw InvalidInputError("encode_gop: shape mismatch");
    MotionField mv = block_match(frames[t], recon, cfg.block_h, cfg.block_w, cfg.search_range);
    Frame pred = motion_compensate(recon, mv);
    Residual res(pred.height, pred.width);
    Frame next_recon(pred.height, pred.width);
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
      const int diff = static_cast<int>(frames[t].data[i]) - static_cast<int>(pred.data[i]);
      const std::int16_t qd = quantize_component(diff, cfg.quant_step);
      res.v[i] = qd;
      next_recon.data[i] =
          static_cast<std::uint8_t>(std::clamp(static_cast<int>(pred.data[i]) + qd, 0, 255));
    }
    gop.motion.push_back(std::move(mv));
    gop.residual.push_back(std::move(res));
    gop.pad_mask.push_back(true);
    recon = std::move(next_recon);
  }
  return gop;
}

void pad_gop(Gop& gop, int pad_len, int block_h, int block_w) {
  if (pad_len < 1) throw InvalidConfigError("pad_gop: pad_len < 1");
  check_block_divisibility(gop.iframe, block_h, block_w);
  const int want = pad_len - 1;
  if (gop.inter_count() > want) throw InvalidInputError("pad_gop: GOP longer than pad length");
  const int grid_h = gop.iframe.height / block_h;
  const int grid_w = gop.iframe.width / block_w;
  while (gop.inter_count() < want) {
    gop.motion.emplace_back(grid_h, grid_w, block_h, block_w);
    gop.residual.emplace_back(gop.iframe.height, gop.iframe.width);
    gop.pad_mask.push_back(false);
  }
}

std::vector<Frame> decode_gop(const Gop& gop) {
  if (gop.pad_mask.size() != gop.motion.size() || gop.motion.size() != gop.residual.size()) {
    throw InvalidInputError("decode_gop: inconsistent inter lists");
  }
  bool seen_pad = false;
  for (bool real : gop.pad_mask) {
    if (real && seen_pad) throw InvalidInputError("decode_gop: real entry after padding");
    if (!real) seen_pad = true;
  }

  std::vector<Frame> frames;
  frames.push_back(gop.iframe);
  for (std::size_t t = 0; t < gop.motion.size(); ++t) {
    if (!gop.pad_mask[t]) break;
    Frame pred = motion_compensate(frames.back(), gop.motion[t]);
    Frame next(pred.height, pred.width);
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
      next.data[i] = static_cast<std::uint8_t>(
          std::clamp(static_cast<int>(pred.data[i]) + gop.residual[t].v[i], 0, 255));
    }
    frames.push_back(std::move(next));
  }
  return frames;
}

GopStream compress_clip(const VideoClip& clip, const CodecConfig& cfg) {
  if (clip.frames.empty()) throw InvalidInputError("compress_clip: empty clip");
  if (cfg.max_gop_len > cfg.gop_pad_len) {
    throw InvalidConfigError("compress_clip: max_gop_len exceeds gop_pad_len");
  }
  check_block_divisibility(clip.frames[0], cfg.block_h, cfg.block_w);

  const auto cuts = detect_scene_cuts(clip, cfg.scene_threshold);
  const auto segments = segment_gops(clip.frame_count(), cuts, cfg.max_gop_len);

  GopStream stream;
  stream.header = StreamHeader{clip.width() > 0 ? clip.frames[0].height : 0,
                               clip.frames[0].width,
                               cfg.block_h,
                               cfg.block_w,
                               cfg.gop_pad_len,
                               clip.fps,
                               cfg.quant_step,
                               cfg.scene_threshold};
  stream.gops.resize(segments.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t s = 0; s < segments.size(); ++s) {
    try {
      auto [start, len] = segments[s];
      Gop gop = encode_gop(std::span<const Frame>(clip.frames.data() + start, len), cfg);
      pad_gop(gop, cfg.gop_pad_len, cfg.block_h, cfg.block_w);
      stream.gops[s] = std::move(gop);
    } catch (...) {
#pragma omp critical
      {
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  return stream;
}

VideoClip decode_stream(const GopStream& stream) {
  VideoClip clip;
  clip.fps = stream.header.fps;
  for (const Gop& gop : stream.gops) {
    auto frames = decode_gop(gop);
    for (auto& f : frames) clip.frames.push_back(std::move(f));
  }
  return clip;
}

}  // namespace remora
