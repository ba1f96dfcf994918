#pragma once

#include <cstdint>
#include <vector>

#include "remora/codec.hpp"
#include "remora/config.hpp"
#include "remora/rmr.hpp"
#include "remora/ssm.hpp"

namespace remora {

struct IFrameTokens {
  Mat tokens;  // N_p x d_s
  int patch = 0;
  int frame_h = 0;
  int frame_w = 0;

  int n_p() const { return tokens.rows; }
};

// Row layout: [I-frame span | motion span 1 | ... | motion span T_g-1].
struct GopTokenSequence {
  Mat tokens;  // L_g x d_s
  int n_p = 0;
  int n_m = 0;
  int t_g = 0;
  std::vector<bool> pad_mask;  // T_g - 1 entries

  int l_g() const { return tokens.rows; }
};

struct VideoFeatures {
  Mat features;  // (K*N_p) x d_s
  int gop_count = 0;
  int n_p = 0;
};

// Fixed seeded linear projection of flattened p x p x 3 patches (u8 scaled to
// [0,1]) to d_s dims; zero bias.
struct PatchProjector {
  Mat w;  // d_s x (3*p*p)
  int patch = 0;
  int d_s = 0;

  static PatchProjector seeded(int patch, int d_s, std::uint64_t seed);
  IFrameTokens apply(const Frame& frame) const;
};

IFrameTokens patch_embed(const Frame& frame, int patch, int d_s, std::uint64_t seed);

GopTokenSequence assemble_gop_tokens(const IFrameTokens& iframe_tokens,
                                     const std::vector<MotionTokens>& motion_tokens,
                                     const std::vector<bool>& pad_mask);

// Zero padded motion rows, run the bidirectional scan over all L_g rows, keep
// the first N_p output rows.
Mat local_scan(const GopTokenSequence& seq, const SelectiveParams& fwd,
               const SelectiveParams& bwd);

struct GlobalMixer {
  std::vector<std::pair<SelectiveParams, SelectiveParams>> layers;

  static GlobalMixer seeded(int d_s, int state_dim, int depth, Rng& rng);
  static GlobalMixer feedthrough(int d_s, int state_dim, int depth);
  Mat apply(const Mat& x) const;
};

VideoFeatures global_mix(const std::vector<Mat>& summaries, const GlobalMixer& mixer);

struct HmssParams {
  PatchProjector patch_proj;
  SelectiveParams local_fwd;
  SelectiveParams local_bwd;
  GlobalMixer global;
};

HmssParams make_hmss(const PipelineConfig& cfg);

// Per GOP: patch_embed + embed_motion -> assemble -> local_scan (GOPs in
// parallel), then the global mixer over the concatenated summaries.
VideoFeatures aggregate(const GopStream& stream, const RefinerParams& refiner,
                        const HmssParams& params);

Mat make_prompt_projection(int d_s, int d_llm, std::uint64_t seed);
Mat project_to_prompt(const Mat& features, const Mat& projection);

}  // namespace remora
