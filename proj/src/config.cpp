#include "remora/config.hpp"

#include <fstream>
#include <sstream>

namespace remora {

PipelineConfig desk_preset() { return PipelineConfig{}; }

PipelineConfig paper_preset() {
  PipelineConfig cfg;
  cfg.preset = "paper";
  cfg.height = 384;
  cfg.width = 384;
  cfg.patch = 16;
  cfg.block_h = 4;
  cfg.block_w = 4;
  cfg.gop_pad_len = 32;
  cfg.max_gop_len = 32;
  cfg.k_limit = 64;
  cfg.n_m = 32;
  cfg.d_s = 32;
  cfg.fps = 16;
  cfg.clip_len = 64;
  return cfg;
}

PipelineConfig preset_by_name(const std::string& name) {
  if (name == "desk") return desk_preset();
  if (name == "paper") return paper_preset();
  throw InvalidConfigError("unknown preset: " + name);
}

void apply_config_entry(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  const auto as_int = [&]() {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw InvalidConfigError("bad integer for " + key + ": " + value);
    return v;
  };
  const auto as_u64 = [&]() { return static_cast<std::uint64_t>(std::stoull(value)); };
  const auto as_double = [&]() { return std::stod(value); };

  if (key == "height" || key == "h") cfg.height = as_int();
  else if (key == "width" || key == "w") cfg.width = as_int();
  else if (key == "patch" || key == "p") cfg.patch = as_int();
  else if (key == "block_h") cfg.block_h = as_int();
  else if (key == "block_w") cfg.block_w = as_int();
  else if (key == "gop_pad_len" || key == "t_g") cfg.gop_pad_len = as_int();
  else if (key == "max_gop_len") cfg.max_gop_len = as_int();
  else if (key == "k_limit") cfg.k_limit = as_int();
  else if (key == "n_m") cfg.n_m = as_int();
  else if (key == "d_s") cfg.d_s = as_int();
  else if (key == "state_dim" || key == "q_state") cfg.state_dim = as_int();
  else if (key == "hidden_r") cfg.hidden_r = as_int();
  else if (key == "d_llm") cfg.d_llm = as_int();
  else if (key == "global_depth") cfg.global_depth = as_int();
  else if (key == "search_range") cfg.search_range = as_int();
  else if (key == "scene_threshold") cfg.scene_threshold = as_double();
  else if (key == "fps") cfg.fps = as_int();
  else if (key == "quant_step" || key == "q") cfg.quant_step = as_int();
  else if (key == "clip_len" || key == "t") cfg.clip_len = as_int();
  else if (key == "seed_texture") cfg.seeds.texture = as_u64();
  else if (key == "seed_embed") cfg.seeds.embed = as_u64();
  else if (key == "seed_ssm") cfg.seeds.ssm = as_u64();
  else if (key == "seed_refiner") cfg.seeds.refiner = as_u64();
  else if (key == "seed_projection") cfg.seeds.projection = as_u64();
  else throw InvalidConfigError("unknown config key: " + key);
}

void apply_config_file(PipelineConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    std::size_t b = line.find_last_not_of(" \t\r");
    line = line.substr(a, b - a + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto trim = [](std::string& s) {
      const auto l = s.find_first_not_of(" \t");
      const auto r = s.find_last_not_of(" \t");
      s = l == std::string::npos ? std::string() : s.substr(l, r - l + 1);
    };
    trim(key);
    trim(value);
    apply_config_entry(cfg, key, value);
  }
}

void validate_config(const PipelineConfig& cfg) {
  const auto positive = [](int v, const char* name) {
    if (v < 1) throw InvalidConfigError(std::string(name) + " must be positive");
  };
  positive(cfg.height, "height");
  positive(cfg.width, "width");
  positive(cfg.patch, "patch");
  positive(cfg.block_h, "block_h");
  positive(cfg.block_w, "block_w");
  positive(cfg.gop_pad_len, "gop_pad_len");
  positive(cfg.max_gop_len, "max_gop_len");
  positive(cfg.k_limit, "k_limit");
  positive(cfg.n_m, "n_m");
  positive(cfg.d_s, "d_s");
  positive(cfg.state_dim, "state_dim");
  positive(cfg.hidden_r, "hidden_r");
  positive(cfg.d_llm, "d_llm");
  positive(cfg.global_depth, "global_depth");
  positive(cfg.fps, "fps");
  positive(cfg.quant_step, "quant_step");
  positive(cfg.clip_len, "clip_len");
  if (cfg.search_range < 0) throw InvalidConfigError("search_range must be >= 0");
  if (!(cfg.scene_threshold > 0.0 && cfg.scene_threshold <= 1.0)) {
    throw InvalidConfigError("scene_threshold must be in (0, 1]");
  }
  if (cfg.height % cfg.patch != 0 || cfg.width % cfg.patch != 0) {
    throw InvalidConfigError("frame dimensions must be divisible by patch size");
  }
  if (cfg.height % cfg.block_h != 0 || cfg.width % cfg.block_w != 0) {
    throw InvalidConfigError("frame dimensions must be divisible by block size");
  }
  if (cfg.max_gop_len > cfg.gop_pad_len) {
    throw InvalidConfigError("max_gop_len must not exceed gop_pad_len");
  }
}

}  // namespace remora
