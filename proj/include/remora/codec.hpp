#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "remora/video.hpp"

namespace remora {

// Block-level displacement grid. Convention: reference block position =
// current block position + displacement, i.e. entry (dy, dx) for block (u, v)
// points at the reference block whose top-left pixel is
// (u*block_h + dy, v*block_w + dx).
struct MotionField {
  int grid_h = 0;
  int grid_w = 0;
  int block_h = 0;
  int block_w = 0;
  std::vector<std::int16_t> v;  // 2 per cell: dy, dx

  MotionField() = default;
  MotionField(int gh, int gw, int bh, int bw)
      : grid_h(gh), grid_w(gw), block_h(bh), block_w(bw),
        v(static_cast<std::size_t>(gh) * gw * 2, 0) {}

  std::int16_t dy(int u, int w) const { return v[(static_cast<std::size_t>(u) * grid_w + w) * 2]; }
  std::int16_t dx(int u, int w) const { return v[(static_cast<std::size_t>(u) * grid_w + w) * 2 + 1]; }
  void set(int u, int w, std::int16_t fy, std::int16_t fx) {
    v[(static_cast<std::size_t>(u) * grid_w + w) * 2] = fy;
    v[(static_cast<std::size_t>(u) * grid_w + w) * 2 + 1] = fx;
  }

  bool is_zero() const {
    for (auto d : v) {
      if (d != 0) return false;
    }
    return true;
  }
};

// True pixel minus predicted pixel, entries in [-255, 255].
struct Residual {
  int height = 0;
  int width = 0;
  std::vector<std::int16_t> v;  // H*W*3

  Residual() = default;
  Residual(int h, int w) : height(h), width(w), v(static_cast<std::size_t>(h) * w * 3, 0) {}

  std::int16_t at(int y, int x, int c) const {
    return v[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
};

struct Gop {
  Frame iframe;
  std::vector<MotionField> motion;   // one per inter entry
  std::vector<Residual> residual;    // parallel to motion
  std::vector<bool> pad_mask;        // true = real inter frame, false = padding

  // Real frame count T_k (I-frame included).
  int real_length() const {
    int n = 1;
    for (bool b : pad_mask) n += b ? 1 : 0;
    return n;
  }
  int inter_count() const { return static_cast<int>(motion.size()); }
};

struct StreamHeader {
  int height = 0;
  int width = 0;
  int block_h = 4;
  int block_w = 4;
  int gop_pad_len = 8;  // T_g
  int fps = 16;
  int quant_step = 1;
  double scene_threshold = 0.3;
};

struct GopStream {
  StreamHeader header;
  std::vector<Gop> gops;

  int gop_count() const { return static_cast<int>(gops.size()); }
};

struct CodecConfig {
  int block_h = 4;
  int block_w = 4;
  int search_range = 4;
  int max_gop_len = 8;
  int gop_pad_len = 8;  // T_g, >= max_gop_len
  double scene_threshold = 0.3;
  int quant_step = 1;
};

// Indices i with normalized mean absolute difference |frame_i - frame_{i-1}|
// above threshold; index 0 never appears.
std::vector<int> detect_scene_cuts(const VideoClip& clip, double threshold);

// Partition [0, frame_count) at the cuts, splitting greedily so no segment
// exceeds max_gop_len.
std::vector<std::pair<int, int>> segment_gops(int frame_count, const std::vector<int>& cuts,
                                              int max_gop_len);

// Exhaustive SAD search over |dy|,|dx| <= search_range, skipping displacements
// whose reference block leaves the frame. Ties: smaller |dy|+|dx|, then
// lexicographic (dy, dx).
MotionField block_match(const Frame& current, const Frame& reference, int block_h, int block_w,
                        int search_range);

// Copy reference blocks at displaced positions. No filtering.
Frame motion_compensate(const Frame& reference, const MotionField& mv);

// Encode frames[0] as the I-frame and the rest as motion + residual against
// the reconstructed predecessor. Returns an unpadded Gop (pad_mask all true).
Gop encode_gop(std::span<const Frame> frames, const CodecConfig& cfg);

// Append all-zero motion/residual entries with pad_mask false until the inter
// list holds pad_len - 1 entries.
void pad_gop(Gop& gop, int pad_len, int block_h, int block_w);

// Reconstruct the real frames; padded entries are skipped.
std::vector<Frame> decode_gop(const Gop& gop);

GopStream compress_clip(const VideoClip& clip, const CodecConfig& cfg);

// Concatenated per-GOP decodes.
VideoClip decode_stream(const GopStream& stream);

}  // namespace remora
