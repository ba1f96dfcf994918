#pragma once

#include <cstdint>
#include <string>

#include "remora/codec.hpp"
#include "remora/rmr.hpp"

namespace remora {

struct Seeds {
  std::uint64_t texture = 1;
  std::uint64_t embed = 2;
  std::uint64_t ssm = 3;
  std::uint64_t refiner = 4;
  std::uint64_t projection = 5;
};

struct PipelineConfig {
  std::string preset = "desk";
  int height = 64;
  int width = 64;
  int patch = 8;          // p
  int block_h = 4;
  int block_w = 4;
  int gop_pad_len = 8;    // T_g
  int max_gop_len = 8;
  int k_limit = 8;        // GOP budget for flat-token accounting
  int n_m = 16;
  int d_s = 32;
  int state_dim = 4;      // Q
  int hidden_r = 32;      // refiner trunk width
  int d_llm = 64;
  int global_depth = 2;
  int search_range = 4;
  double scene_threshold = 0.3;
  int fps = 16;
  int quant_step = 1;
  int clip_len = 8;       // default T for synth
  Seeds seeds;

  CodecConfig codec() const {
    return CodecConfig{block_h, block_w, search_range, max_gop_len,
                       gop_pad_len, scene_threshold, quant_step};
  }
  RefinerConfig refiner() const { return RefinerConfig{hidden_r, block_h, block_w, n_m, d_s}; }

  int n_p() const { return (height * width) / (patch * patch); }
  int l_g() const { return n_p() + (gop_pad_len - 1) * n_m; }
  long long flat_total() const { return static_cast<long long>(k_limit) * l_g(); }
};

PipelineConfig desk_preset();
PipelineConfig paper_preset();
PipelineConfig preset_by_name(const std::string& name);

// key=value lines, '#' comments. Unknown keys are errors.
void apply_config_file(PipelineConfig& cfg, const std::string& path);
void apply_config_entry(PipelineConfig& cfg, const std::string& key, const std::string& value);

// Throws InvalidConfigError on violated divisibility/positivity constraints.
void validate_config(const PipelineConfig& cfg);

}  // namespace remora
