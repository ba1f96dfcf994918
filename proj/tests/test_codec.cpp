#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <numeric>

#include "remora/codec.hpp"
#include "remora/io.hpp"
#include "remora/synthflow.hpp"
#include "oracles.hpp"

using namespace remora;

namespace {

VideoClip constant_clip(int t, int h, int w, std::uint8_t value) {
  VideoClip clip;
  for (int i = 0; i < t; ++i) clip.frames.emplace_back(h, w, value);
  return clip;
}

CodecConfig desk_codec() { return CodecConfig{}; }

}  // namespace

TEST_CASE("detect_scene_cuts: static clip has none") {
  CHECK(detect_scene_cuts(constant_clip(6, 16, 16, 77), 0.01).empty());
}

TEST_CASE("detect_scene_cuts: black-to-white step") {
  VideoClip clip = constant_clip(4, 16, 16, 0);
  for (int i = 0; i < 4; ++i) clip.frames.emplace_back(16, 16, 255);
  CHECK(detect_scene_cuts(clip, 0.5) == std::vector<int>{4});
}

TEST_CASE("detect_scene_cuts: rendered clip with a hard swap at frame 7") {
  MotionSpec spec;
  spec.kind = MotionKind::Translate;
  spec.ty = 0.4;
  spec.tx = -0.8;
  RenderResult a = render_clip(spec, 7, 64, 64, 101);
  MotionSpec spec_b;
  spec_b.kind = MotionKind::Rotate;
  spec_b.theta = 0.03;
  RenderResult b = render_clip(spec_b, 5, 64, 64, 909);

  VideoClip clip = a.clip;
  for (Frame f : b.clip.frames) {
    for (auto& v : f.data) v = static_cast<std::uint8_t>(v / 8);  // darkened second scene
    clip.frames.push_back(std::move(f));
  }

  const auto series = oracles::frame_diff_series(clip);
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (i + 1 == 7) {
      CHECK(series[i] > 0.3);
    } else {
      CHECK(series[i] <= 0.3);
    }
  }
  CHECK(detect_scene_cuts(clip, 0.3) == std::vector<int>{7});
}

TEST_CASE("detect_scene_cuts: empty clip rejected") {
  CHECK_THROWS_AS(detect_scene_cuts(VideoClip{}, 0.3), InvalidInputError);
}

TEST_CASE("segment_gops: spec examples") {
  using Segs = std::vector<std::pair<int, int>>;
  CHECK(segment_gops(10, {}, 32) == Segs{{0, 10}});
  CHECK(segment_gops(10, {4}, 32) == Segs{{0, 4}, {4, 6}});
  CHECK(segment_gops(70, {}, 32) == oracles::greedy_segments(70, {}, 32));
  CHECK(segment_gops(70, {}, 32) == Segs{{0, 32}, {32, 32}, {64, 6}});
  CHECK_THROWS_AS(segment_gops(10, {}, 0), InvalidConfigError);
  CHECK_THROWS_AS(segment_gops(10, {12}, 8), InvalidInputError);
}

TEST_CASE("segment_gops: partitions against the greedy oracle") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const int t = rng.uniform_int(1, 100);
    const int max_len = rng.uniform_int(1, 20);
    std::vector<int> cuts;
    for (int i = 1; i < t; ++i) {
      if (rng.uniform() < 0.1) cuts.push_back(i);
    }
    const auto segs = segment_gops(t, cuts, max_len);
    CHECK(segs == oracles::greedy_segments(t, cuts, max_len));
    int total = 0;
    for (auto [start, len] : segs) {
      CHECK(start == total);
      CHECK(len >= 1);
      CHECK(len <= max_len);
      total += len;
    }
    CHECK(total == t);
  }
}

TEST_CASE("block_match: identical frames give zero displacement") {
  Rng rng(7);
  const Frame f = oracles::random_frame(16, 16, rng);
  const MotionField mv = block_match(f, f, 4, 4, 3);
  CHECK(mv.is_zero());
}

TEST_CASE("block_match: right shift by one pixel") {
  Rng rng(8);
  const Frame ref = oracles::random_frame(8, 8, rng);
  Frame cur(8, 8);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      for (int c = 0; c < 3; ++c) cur.set(y, x, c, ref.at(y, std::max(0, x - 1), c));
    }
  }
  const MotionField mv = block_match(cur, ref, 4, 4, 2);
  // wrap-free interior: the right block column can reach its source
  for (int u = 0; u < 2; ++u) {
    CHECK(mv.dy(u, 1) == 0);
    CHECK(mv.dx(u, 1) == -1);
  }
}

TEST_CASE("block_match: constant frames pick the origin by tie-break") {
  const Frame a(12, 12, 128);
  const MotionField mv = block_match(a, a, 4, 4, 4);
  CHECK(mv.is_zero());
}

TEST_CASE("block_match: equals the exhaustive oracle on random frames") {
  Rng rng(9);
  for (int trial = 0; trial < 40; ++trial) {
    const Frame cur = oracles::random_frame(16, 16, rng);
    const Frame ref = oracles::random_frame(16, 16, rng);
    const int range = rng.uniform_int(1, 5);
    const MotionField got = block_match(cur, ref, 4, 4, range);
    const MotionField want = oracles::block_match_exhaustive(cur, ref, 4, 4, range);
    CHECK(got.v == want.v);
  }
}

TEST_CASE("block_match: shape mismatch rejected") {
  CHECK_THROWS_AS(block_match(Frame(8, 8), Frame(8, 12), 4, 4, 1), InvalidInputError);
  CHECK_THROWS_AS(block_match(Frame(10, 10), Frame(10, 10), 4, 4, 1), InvalidInputError);
}

TEST_CASE("motion_compensate: zero field is identity") {
  Rng rng(10);
  const Frame ref = oracles::random_frame(16, 16, rng);
  MotionField mv(4, 4, 4, 4);
  CHECK(motion_compensate(ref, mv).data == ref.data);
}

TEST_CASE("motion_compensate: single-block displacement against index arithmetic") {
  Rng rng(11);
  const Frame ref = oracles::random_frame(8, 8, rng);
  MotionField mv(2, 2, 4, 4);
  mv.set(0, 0, 1, 0);
  const Frame out = motion_compensate(ref, mv);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      for (int c = 0; c < 3; ++c) CHECK(out.at(y, x, c) == ref.at(y + 1, x, c));
    }
  }
}

TEST_CASE("motion_compensate: out-of-bounds displacement rejected") {
  MotionField mv(2, 2, 4, 4);
  mv.set(1, 1, 2, 0);  // block at y=4..8 displaced to 6..10 in an 8-row frame
  CHECK_THROWS_AS(motion_compensate(Frame(8, 8), mv), InvalidInputError);
}

TEST_CASE("encode_gop: single frame has no inter entries") {
  Rng rng(12);
  const Frame f = oracles::random_frame(16, 16, rng);
  const Gop gop = encode_gop(std::span<const Frame>(&f, 1), desk_codec());
  CHECK(gop.inter_count() == 0);
  CHECK(gop.real_length() == 1);
}

TEST_CASE("encode_gop: static pair yields zero motion and residual") {
  Rng rng(13);
  VideoClip clip;
  clip.frames.push_back(oracles::random_frame(16, 16, rng));
  clip.frames.push_back(clip.frames[0]);
  const Gop gop = encode_gop(clip.frames, desk_codec());
  CHECK(gop.motion[0].is_zero());
  for (auto r : gop.residual[0].v) CHECK(r == 0);
}

TEST_CASE("encode/decode round trip: motion_compensate + residual reconstructs exactly") {
  MotionSpec spec;
  spec.kind = MotionKind::Translate;
  spec.ty = 1.3;
  spec.tx = -0.7;
  const RenderResult rr = render_clip(spec, 3, 32, 32, 99);
  const Gop gop = encode_gop(rr.clip.frames, desk_codec());
  const auto decoded = decode_gop(gop);
  REQUIRE(decoded.size() == 3);
  for (int t = 0; t < 3; ++t) CHECK(decoded[t].data == rr.clip.frames[t].data);
}

TEST_CASE("decode_gop: zero stream repeats the I-frame") {
  Rng rng(14);
  Gop gop;
  gop.iframe = oracles::random_frame(16, 16, rng);
  for (int t = 0; t < 3; ++t) {
    gop.motion.emplace_back(4, 4, 4, 4);
    gop.residual.emplace_back(16, 16);
    gop.pad_mask.push_back(true);
  }
  const auto frames = decode_gop(gop);
  REQUIRE(frames.size() == 4);
  for (const Frame& f : frames) CHECK(f.data == gop.iframe.data);
}

TEST_CASE("decode_gop: +1 residual adds one per channel") {
  Frame iframe(8, 8, 100);
  Gop gop;
  gop.iframe = iframe;
  gop.motion.emplace_back(2, 2, 4, 4);
  Residual res(8, 8);
  for (auto& v : res.v) v = 1;
  gop.residual.push_back(res);
  gop.pad_mask.push_back(true);
  const auto frames = decode_gop(gop);
  for (std::size_t i = 0; i < frames[1].data.size(); ++i) CHECK(frames[1].data[i] == 101);
}

TEST_CASE("decode_gop: padded entries are skipped") {
  Rng rng(15);
  Gop gop;
  gop.iframe = oracles::random_frame(16, 16, rng);
  gop.motion.emplace_back(4, 4, 4, 4);
  gop.residual.emplace_back(16, 16);
  gop.pad_mask.push_back(false);
  CHECK(decode_gop(gop).size() == 1);
}

TEST_CASE("decode_gop: malformed pad masks rejected") {
  Gop gop;
  gop.iframe = Frame(8, 8);
  gop.motion.emplace_back(2, 2, 4, 4);
  gop.residual.emplace_back(8, 8);
  gop.pad_mask = {false};
  gop.motion.emplace_back(2, 2, 4, 4);
  gop.residual.emplace_back(8, 8);
  gop.pad_mask.push_back(true);  // real after padding
  CHECK_THROWS_AS(decode_gop(gop), InvalidInputError);

  Gop short_mask;
  short_mask.iframe = Frame(8, 8);
  short_mask.motion.emplace_back(2, 2, 4, 4);
  short_mask.residual.emplace_back(8, 8);
  CHECK_THROWS_AS(decode_gop(short_mask), InvalidInputError);
}

TEST_CASE("compress_clip: static clip is one GOP with trailing padding") {
  VideoClip clip = constant_clip(8, 16, 16, 50);
  CodecConfig cfg = desk_codec();
  cfg.max_gop_len = 32;
  cfg.gop_pad_len = 32;
  const GopStream stream = compress_clip(clip, cfg);
  REQUIRE(stream.gop_count() == 1);
  const Gop& gop = stream.gops[0];
  CHECK(gop.real_length() == 8);
  CHECK(gop.inter_count() == 31);
  for (int t = 0; t < 31; ++t) CHECK(gop.pad_mask[t] == (t < 7));
}

TEST_CASE("compress_clip: one hard cut gives two GOPs") {
  VideoClip clip = constant_clip(4, 16, 16, 10);
  for (int i = 0; i < 4; ++i) clip.frames.emplace_back(16, 16, 240);
  const GopStream stream = compress_clip(clip, desk_codec());
  CHECK(stream.gop_count() == 2);
}

TEST_CASE("compress_clip: forced splits at max_gop_len") {
  MotionSpec spec;
  spec.kind = MotionKind::Translate;
  spec.ty = 0.3;
  spec.tx = 0.2;
  const RenderResult rr = render_clip(spec, 70, 32, 32, 5);
  CodecConfig cfg = desk_codec();
  cfg.max_gop_len = 32;
  cfg.gop_pad_len = 32;
  const GopStream stream = compress_clip(rr.clip, cfg);
  CHECK(stream.gop_count() == 3);
  CHECK(stream.gops[0].real_length() == 32);
  CHECK(stream.gops[1].real_length() == 32);
  CHECK(stream.gops[2].real_length() == 6);
}

TEST_CASE("compress/decode: lossless round trip across motion kinds") {
  Rng rng(16);
  for (int trial = 0; trial < 6; ++trial) {
    Rng spec_rng = rng.fork(trial);
    MotionSpec spec;
    switch (trial % 3) {
      case 0:
        spec.kind = MotionKind::Translate;
        spec.ty = spec_rng.uniform(-2.0, 2.0);
        spec.tx = spec_rng.uniform(-2.0, 2.0);
        break;
      case 1:
        spec.kind = MotionKind::Rotate;
        spec.theta = spec_rng.uniform(-0.05, 0.05);
        break;
      default:
        spec.kind = MotionKind::Zoom;
        spec.scale = spec_rng.uniform(0.95, 1.05);
        break;
    }
    const RenderResult rr = render_clip(spec, 1 + trial, 32, 32, 1000 + trial);
    const GopStream stream = compress_clip(rr.clip, desk_codec());
    const VideoClip decoded = decode_stream(stream);
    REQUIRE(decoded.frame_count() == rr.clip.frame_count());
    for (int t = 0; t < decoded.frame_count(); ++t) {
      CHECK(decoded.frames[t].data == rr.clip.frames[t].data);
    }
  }
}

TEST_CASE("quantized residuals decode within q/2 per component") {
  MotionSpec spec;
  spec.kind = MotionKind::Zoom;
  spec.scale = 1.04;
  const RenderResult rr = render_clip(spec, 4, 32, 32, 21);
  CodecConfig cfg = desk_codec();
  cfg.quant_step = 6;
  const GopStream stream = compress_clip(rr.clip, cfg);
  const VideoClip decoded = decode_stream(stream);
  for (int t = 0; t < 4; ++t) {
    for (std::size_t i = 0; i < decoded.frames[t].data.size(); ++i) {
      const int diff = std::abs(static_cast<int>(decoded.frames[t].data[i]) -
                                static_cast<int>(rr.clip.frames[t].data[i]));
      CHECK(diff <= 3);
    }
  }
}

TEST_CASE("GOPS file round trip preserves every byte of the stream") {
  MotionSpec spec;
  spec.kind = MotionKind::Rotate;
  spec.theta = 0.04;
  const RenderResult rr = render_clip(spec, 9, 32, 32, 77);
  const GopStream stream = compress_clip(rr.clip, desk_codec());

  const std::string path = "test_codec_stream.gops";
  write_gop_stream(path, stream);
  const GopStream loaded = read_gop_stream(path);
  CHECK(loaded.gop_count() == stream.gop_count());
  const std::string path2 = "test_codec_stream2.gops";
  write_gop_stream(path2, loaded);

  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);

  const VideoClip decoded = decode_stream(loaded);
  for (int t = 0; t < decoded.frame_count(); ++t) {
    CHECK(decoded.frames[t].data == rr.clip.frames[t].data);
  }
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("single-frame GOPs pad and serialize with non-default block sizes") {
  VideoClip clip = constant_clip(1, 16, 16, 33);
  CodecConfig cfg = desk_codec();
  cfg.block_h = 8;
  cfg.block_w = 8;
  cfg.gop_pad_len = 4;
  cfg.max_gop_len = 4;
  const GopStream stream = compress_clip(clip, cfg);
  REQUIRE(stream.gop_count() == 1);
  CHECK(stream.gops[0].inter_count() == 3);
  CHECK(stream.gops[0].motion[0].grid_h == 2);

  const std::string path = "test_codec_single.gops";
  write_gop_stream(path, stream);
  const auto decoded = decode_stream(read_gop_stream(path));
  REQUIRE(decoded.frame_count() == 1);
  CHECK(decoded.frames[0].data == clip.frames[0].data);
  std::remove(path.c_str());
}

TEST_CASE("GOPS reader rejects bad magic, bad version, truncation") {
  VideoClip clip = constant_clip(2, 8, 8, 9);
  const GopStream stream = compress_clip(clip, desk_codec());
  const std::string path = "test_codec_bad.gops";
  write_gop_stream(path, stream);

  std::string bytes;
  {
    std::ifstream f(path, std::ios::binary);
    bytes.assign((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  }

  {
    std::string bad = bytes;
    bad[0] = 'X';
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(bad.data(), bad.size());
  }
  CHECK_THROWS_AS(read_gop_stream(path), FormatError);

  {
    std::string bad = bytes;
    bad[4] = 9;  // version
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(bad.data(), bad.size());
  }
  CHECK_THROWS_AS(read_gop_stream(path), FormatError);

  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), bytes.size() / 2);
  }
  CHECK_THROWS_AS(read_gop_stream(path), FormatError);
  std::remove(path.c_str());
}
