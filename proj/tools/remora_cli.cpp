#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "remora/bench.hpp"
#include "remora/codec.hpp"
#include "remora/config.hpp"
#include "remora/dataset.hpp"
#include "remora/hmss.hpp"
#include "remora/io.hpp"
#include "remora/rmr.hpp"
#include "remora/ssm.hpp"
#include "remora/synthflow.hpp"

namespace {

using nlohmann::json;
using namespace remora;

constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;
constexpr int kExitNumeric = 4;

// Config plumbing shared by the subcommands. Precedence:
// preset < --config file < explicit flags.
struct ConfigCli {
  std::string preset = "desk";
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--preset", preset, "configuration preset (desk|paper)")
        ->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_option("--config", config_path, "key=value file overriding preset fields");
    const auto add = [this, cmd](const char* flag, const char* key, const char* help) {
      cmd->add_option_function<std::string>(
          flag, [this, key](const std::string& v) { overrides.emplace_back(key, v); }, help);
    };
    add("--height", "height", "frame height");
    add("--width", "width", "frame width");
    add("--patch", "patch", "I-frame patch size p");
    add("--block-h", "block_h", "macroblock height");
    add("--block-w", "block_w", "macroblock width");
    add("--tg", "gop_pad_len", "padded GOP length T_g");
    add("--max-gop-len", "max_gop_len", "maximum GOP length before a forced split");
    add("--k-limit", "k_limit", "GOP budget used for flat-token accounting");
    add("--nm", "n_m", "motion tokens per inter frame");
    add("--ds", "d_s", "token embedding dimension");
    add("--q-state", "state_dim", "SSM state dimension Q");
    add("--hidden-r", "hidden_r", "refiner trunk width");
    add("--d-llm", "d_llm", "prompt projection output dimension");
    add("--global-depth", "global_depth", "global mixer layer count");
    add("--search-range", "search_range", "block search radius in pixels");
    add("--scene-threshold", "scene_threshold", "scene cut threshold in (0,1]");
    add("--fps", "fps", "frames per second");
    add("--quant", "quant_step", "residual quantization step q");
    add("--t", "clip_len", "clip length in frames");
    add("--seed-texture", "seed_texture", "texture seed");
    add("--seed-embed", "seed_embed", "patch embedding seed");
    add("--seed-ssm", "seed_ssm", "SSM parameter seed");
    add("--seed-refiner", "seed_refiner", "refiner init seed");
    add("--seed-projection", "seed_projection", "prompt projection seed");
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg = preset_by_name(preset);
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    for (const auto& [key, value] : overrides) apply_config_entry(cfg, key, value);
    validate_config(cfg);
    return cfg;
  }
};

std::string default_sibling(const std::string& path, const std::string& suffix) {
  return path + suffix;
}

void emit_json_line(std::ostream& os, const json& j) { os << j.dump() << "\n"; }

// ---------------------------------------------------------------- synth ----

struct SynthArgs {
  ConfigCli config;
  std::string kind;
  double ty = 0.0, tx = 0.0, theta = 0.0, scale = 1.0, cy = -1.0, cx = -1.0;
  std::string out;
  std::string flow_out;
};

int run_synth(const SynthArgs& a) {
  const PipelineConfig cfg = a.config.resolve();
  if (cfg.clip_len < 2) throw InvalidInputError("synth: need --t >= 2 to emit flow entries");

  MotionSpec spec;
  if (a.kind == "translate") {
    spec.kind = MotionKind::Translate;
    spec.ty = a.ty;
    spec.tx = a.tx;
  } else if (a.kind == "rotate") {
    spec.kind = MotionKind::Rotate;
    spec.theta = a.theta;
  } else {
    spec.kind = MotionKind::Zoom;
    spec.scale = a.scale;
  }
  spec.cy = a.cy;
  spec.cx = a.cx;

  const RenderResult rr =
      render_clip(spec, cfg.clip_len, cfg.height, cfg.width, cfg.seeds.texture, cfg.fps);
  write_clip(a.out, rr.clip);
  const std::string flow_path =
      a.flow_out.empty() ? default_sibling(a.out, ".flow") : a.flow_out;
  write_flows(flow_path, rr.flows);

  json summary;
  summary["frames"] = cfg.clip_len;
  summary["height"] = cfg.height;
  summary["width"] = cfg.width;
  summary["flow_entries"] = static_cast<int>(rr.flows.size());
  summary["out"] = a.out;
  summary["flow_out"] = flow_path;
  emit_json_line(std::cout, summary);
  return 0;
}

// ------------------------------------------------------------- compress ----

struct CompressArgs {
  ConfigCli config;
  std::string in;
  std::string out;
};

int run_compress(const CompressArgs& a) {
  const PipelineConfig cfg = a.config.resolve();
  const VideoClip clip = read_clip(a.in);
  const GopStream stream = compress_clip(clip, cfg.codec());
  write_gop_stream(a.out, stream);

  const long long bytes_raw =
      static_cast<long long>(clip.frame_count()) * clip.height() * clip.width() * 3;
  // Entropy proxy: I-frames + real motion fields + nonzero residual entries.
  long long bytes_compressed = 24;  // file header
  long long nonzero = 0, total_components = 0;
  json gop_lengths = json::array();
  for (const Gop& gop : stream.gops) {
    gop_lengths.push_back(gop.real_length());
    bytes_compressed += static_cast<long long>(gop.iframe.data.size()) + 2;
    for (std::size_t t = 0; t < gop.motion.size(); ++t) {
      if (!gop.pad_mask[t]) continue;
      bytes_compressed += static_cast<long long>(gop.motion[t].v.size()) * 2;
      for (std::int16_t r : gop.residual[t].v) {
        ++total_components;
        if (r != 0) {
          ++nonzero;
          bytes_compressed += 2;
        }
      }
    }
  }

  json summary;
  summary["k"] = stream.gop_count();
  summary["gop_lengths"] = gop_lengths;
  summary["bytes_raw"] = bytes_raw;
  summary["bytes_compressed"] = bytes_compressed;
  summary["ratio"] = static_cast<double>(bytes_raw) / static_cast<double>(bytes_compressed);
  summary["nonzero_residual_fraction"] =
      total_components > 0 ? static_cast<double>(nonzero) / static_cast<double>(total_components)
                           : 0.0;
  emit_json_line(std::cout, summary);
  return 0;
}

// --------------------------------------------------------------- decode ----

struct DecodeArgs {
  std::string in;
  std::string out;
};

int run_decode(const DecodeArgs& a) {
  const GopStream stream = read_gop_stream(a.in);
  write_clip(a.out, decode_stream(stream));
  return 0;
}

// --------------------------------------------------------- pretrain-rmr ----

struct PretrainArgs {
  ConfigCli config;
  int clips = 12;
  int holdout_clips = 6;
  int frames = 3;
  int steps = 2000;
  double lr = 0.1;
  std::string out;
  std::string trace;
};

int run_pretrain(const PretrainArgs& a) {
  const PipelineConfig cfg = a.config.resolve();
  if (a.clips < 1 || a.holdout_clips < 1) {
    throw InvalidInputError("pretrain-rmr: need at least one train and one held-out clip");
  }

  Rng dataset_rng(cfg.seeds.texture);
  const auto train = make_flow_dataset(cfg, dataset_rng.fork(1).next_u64(), a.clips, a.frames);
  const auto holdout =
      make_flow_dataset(cfg, dataset_rng.fork(2).next_u64(), a.holdout_clips, a.frames);

  Rng init_rng(cfg.seeds.refiner);
  RefinerParams init = make_refiner(cfg.refiner(), init_rng);
  PretrainResult result = pretrain(std::move(init), train, a.steps, a.lr);

  save_refiner(a.out, result.params);
  const std::string trace_path = a.trace.empty() ? default_sibling(a.out, ".trace.jsonl") : a.trace;
  {
    std::ofstream tf(trace_path, std::ios::trunc);
    if (!tf) throw IoError("pretrain-rmr: cannot open trace file " + trace_path);
    for (std::size_t s = 0; s < result.loss.size(); ++s) {
      json line;
      line["step"] = s;
      line["loss"] = result.loss[s];
      tf << line.dump() << "\n";
    }
  }

  json summary;
  summary["steps"] = a.steps;
  summary["final_loss"] = result.loss.back();
  summary["train_epe_refined"] = mean_epe_refined(result.params, train);
  summary["holdout_epe_refined"] = mean_epe_refined(result.params, holdout);
  summary["holdout_epe_baseline"] = mean_epe_baseline(holdout);
  summary["margin"] = summary["holdout_epe_baseline"].get<double>() -
                      summary["holdout_epe_refined"].get<double>();
  summary["params_out"] = a.out;
  summary["trace_out"] = trace_path;
  emit_json_line(std::cout, summary);
  return 0;
}

// ------------------------------------------------------------ aggregate ----

struct AggregateArgs {
  ConfigCli config;
  std::string in;
  std::string params;
  std::string out;
  std::string sidecar;
};

int run_aggregate(const AggregateArgs& a) {
  const PipelineConfig cfg = a.config.resolve();
  const GopStream stream = read_gop_stream(a.in);
  if (stream.header.height % cfg.patch != 0 || stream.header.width % cfg.patch != 0) {
    throw InvalidInputError("aggregate: stream dimensions not divisible by patch size");
  }

  RefinerParams refiner = [&] {
    if (!a.params.empty()) return load_refiner(a.params);
    Rng rng(cfg.seeds.refiner);
    return make_refiner(cfg.refiner(), rng);
  }();
  if (refiner.cfg.block_h != stream.header.block_h ||
      refiner.cfg.block_w != stream.header.block_w) {
    throw InvalidInputError("aggregate: refiner block size does not match stream");
  }
  if (refiner.cfg.d_s != cfg.d_s || refiner.cfg.n_m != cfg.n_m) {
    throw InvalidInputError("aggregate: refiner token shape does not match config");
  }

  const HmssParams hmss = make_hmss(cfg);
  const VideoFeatures features = aggregate(stream, refiner, hmss);
  write_tensor(a.out, {features.features.rows, features.features.cols}, features.features.v);

  const int n_p = (stream.header.height / cfg.patch) * (stream.header.width / cfg.patch);
  const int l_g = n_p + (stream.header.gop_pad_len - 1) * cfg.n_m;
  json sidecar;
  sidecar["k"] = stream.gop_count();
  sidecar["n_p"] = n_p;
  sidecar["n_m"] = cfg.n_m;
  sidecar["t_g"] = stream.header.gop_pad_len;
  sidecar["l_g"] = l_g;
  sidecar["d_s"] = cfg.d_s;
  sidecar["flat_total"] = static_cast<long long>(stream.gop_count()) * l_g;
  sidecar["compression_factor"] = static_cast<double>(l_g) / static_cast<double>(n_p);
  sidecar["rows"] = features.features.rows;
  sidecar["seeds"] = {{"embed", cfg.seeds.embed},
                      {"ssm", cfg.seeds.ssm},
                      {"refiner", cfg.seeds.refiner},
                      {"projection", cfg.seeds.projection}};
  const std::string sidecar_path =
      a.sidecar.empty() ? default_sibling(a.out, ".json") : a.sidecar;
  {
    std::ofstream sf(sidecar_path, std::ios::trunc);
    if (!sf) throw IoError("aggregate: cannot open sidecar " + sidecar_path);
    sf << sidecar.dump(2) << "\n";
  }
  emit_json_line(std::cout, sidecar);
  return 0;
}

// ---------------------------------------------------------------- bench ----

struct BenchArgs {
  ConfigCli config;
  std::string stage;
  std::vector<long long> sizes;
  int repeats = 5;
  int dim = 8;
  bool parallel = false;
  std::string out;
  std::string csv;
};

int run_bench(const BenchArgs& a) {
  if (a.sizes.size() < 3) throw InvalidInputError("bench: need a sweep of at least 3 sizes");
  if (a.repeats < 1) throw InvalidInputError("bench: repeats must be >= 1");
  for (std::size_t i = 0; i < a.sizes.size(); ++i) {
    if (a.sizes[i] < 1 || (i > 0 && a.sizes[i] <= a.sizes[i - 1])) {
      throw InvalidInputError("bench: sizes must be positive and strictly increasing");
    }
  }
#ifdef _OPENMP
  if (!a.parallel) omp_set_num_threads(1);
#endif
  const PipelineConfig cfg = a.config.resolve();

  std::ofstream out_file;
  std::ostream* out = &std::cout;
  if (!a.out.empty() && a.out != "-") {
    out_file.open(a.out, std::ios::trunc);
    if (!out_file) throw IoError("bench: cannot open " + a.out);
    out = &out_file;
  }

  json header;
  header["note"] =
      "stage-level wall times; end-to-end samples/s from the source system needs the "
      "out-of-scope language model and is not reproduced here";
  header["stage"] = a.stage;
  header["repeats"] = a.repeats;
  emit_json_line(*out, header);

  std::vector<BenchRecord> records;
  for (long long size : a.sizes) {
    BenchRecord rec;
    if (a.stage == "scan") {
      rec = bench_selective_scan(static_cast<int>(size), a.dim, cfg.state_dim, a.repeats,
                                 cfg.seeds.ssm);
    } else if (a.stage == "attention") {
      rec = bench_attention(static_cast<int>(size), a.dim, a.repeats, cfg.seeds.ssm);
    } else {
      // pipeline: size = GOP count
      const GopStream stream =
          make_demo_stream(cfg, cfg.seeds.texture, static_cast<int>(size), 4);
      Rng rng(cfg.seeds.refiner);
      const RefinerParams refiner = make_refiner(cfg.refiner(), rng);
      const HmssParams hmss = make_hmss(cfg);
      volatile double sink = 0.0;
      const double median = time_median(
          [&] {
            VideoFeatures vf = aggregate(stream, refiner, hmss);
            sink = sink + vf.features(0, 0);
          },
          a.repeats);
      rec = BenchRecord{"pipeline", size, median, peak_rss_bytes(),
                        median > 0.0 ? static_cast<double>(size) * cfg.l_g() / median : 0.0};
    }
    records.push_back(rec);
    json line;
    line["stage"] = rec.stage;
    line["size"] = rec.size;
    line["median_seconds"] = rec.median_seconds;
    line["peak_bytes"] = rec.peak_bytes;
    line["tokens_per_second"] = rec.tokens_per_second;
    emit_json_line(*out, line);
  }

  if (!a.csv.empty()) {
    std::ofstream cf(a.csv, std::ios::trunc);
    if (!cf) throw IoError("bench: cannot open " + a.csv);
    cf << "# stage-level wall times (median of " << a.repeats
       << "); peak_bytes is the process high-water RSS, approximate\n";
    cf << "size,median_seconds,peak_bytes\n";
    for (const BenchRecord& r : records) {
      cf << r.size << "," << r.median_seconds << "," << r.peak_bytes << "\n";
    }
  }
  return 0;
}

// ------------------------------------------------------------ gradcheck ----

struct GradcheckArgs {
  std::uint64_t seed = 4;
  int trials = 20;
  bool inject_fault = false;
};

struct TensorCheck {
  std::string name;
  double max_rel = 0.0;
};

double rel_error(double a, double b) {
  const double mag = std::max(std::abs(a), std::abs(b));
  if (mag < 1e-8) return 0.0;
  return std::abs(a - b) / mag;
}

int run_gradcheck(const GradcheckArgs& a) {
  if (a.trials < 1) throw InvalidInputError("gradcheck: trials must be >= 1");
  constexpr double kEps = 1e-4;
  constexpr double kTol = 1e-4;

  Rng rng(a.seed);
  std::vector<TensorCheck> checks = {{"w1", 0}, {"b1", 0}, {"w2", 0}, {"b2", 0},
                                     {"wf", 0}, {"bf", 0}, {"wt", 0}, {"bt", 0}};

  for (int trial = 0; trial < a.trials; ++trial) {
    RefinerConfig rc;
    rc.hidden = 4 << rng.uniform_int(0, 2);  // 4, 8, 16
    rc.block_h = rng.uniform_int(0, 1) ? 2 : 4;
    rc.block_w = rng.uniform_int(0, 1) ? 2 : 4;
    rc.n_m = 2 << rng.uniform_int(0, 1);  // 2, 4
    rc.d_s = 4 << rng.uniform_int(0, 1);  // 4, 8
    const int grid_h = rng.uniform_int(2, 4);
    const int grid_w = rng.uniform_int(2, 4);

    RefinerParams params = make_refiner(rc, rng);
    MotionField mv(grid_h, grid_w, rc.block_h, rc.block_w);
    for (auto& d : mv.v) d = static_cast<std::int16_t>(rng.uniform_int(-3, 3));
    DenseFlow target(grid_h * rc.block_h, grid_w * rc.block_w);
    for (double& t : target.v) t = rng.uniform(-2.0, 2.0);

    RefinerGrads grads = backward(params, mv, target);
    if (a.inject_fault) grads.w2.v[0] += 0.5;

    const auto loss_at = [&] { return l2_loss(refine_flow(params, mv), target); };
    const auto check_array = [&](double* p, const double* g, std::size_t n, TensorCheck& tc) {
      for (std::size_t i = 0; i < n; ++i) {
        const double saved = p[i];
        p[i] = saved + kEps;
        const double up = loss_at();
        p[i] = saved - kEps;
        const double down = loss_at();
        p[i] = saved;
        const double fd = (up - down) / (2.0 * kEps);
        tc.max_rel = std::max(tc.max_rel, rel_error(g[i], fd));
      }
    };

    check_array(params.w1.v.data(), grads.w1.v.data(), params.w1.v.size(), checks[0]);
    check_array(params.b1.data(), grads.b1.data(), params.b1.size(), checks[1]);
    check_array(params.w2.v.data(), grads.w2.v.data(), params.w2.v.size(), checks[2]);
    check_array(params.b2.data(), grads.b2.data(), params.b2.size(), checks[3]);
    check_array(params.wf.v.data(), grads.wf.v.data(), params.wf.v.size(), checks[4]);
    check_array(params.bf.data(), grads.bf.data(), params.bf.size(), checks[5]);
    check_array(params.wt.v.data(), grads.wt.v.data(), params.wt.v.size(), checks[6]);
    check_array(params.bt.data(), grads.bt.data(), params.bt.size(), checks[7]);
  }

  double overall = 0.0;
  json per_tensor;
  std::string worst;
  for (const TensorCheck& tc : checks) {
    per_tensor[tc.name] = tc.max_rel;
    if (tc.max_rel >= overall) {
      overall = tc.max_rel;
      worst = tc.name;
    }
  }
  const bool pass = overall <= kTol;

  json report;
  report["trials"] = a.trials;
  report["epsilon"] = kEps;
  report["tolerance"] = kTol;
  report["max_rel_error"] = overall;
  report["per_tensor"] = per_tensor;
  report["pass"] = pass;
  emit_json_line(std::cout, report);
  if (!pass) {
    std::cerr << "gradcheck: tensor " << worst << " exceeds tolerance (" << overall << " > "
              << kTol << ")\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef _OPENMP
  if (const char* env = std::getenv("REMORA_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
#endif

  CLI::App app{"remora: compressed-domain video representation pipeline"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "render a synthetic clip with known dense flow");
  synth_args.config.add_options(synth);
  synth->add_option("--kind", synth_args.kind, "motion kind")
      ->required()
      ->check(CLI::IsMember({"translate", "rotate", "zoom"}));
  synth->add_option("--ty", synth_args.ty, "translation dy px/frame");
  synth->add_option("--tx", synth_args.tx, "translation dx px/frame");
  synth->add_option("--theta", synth_args.theta, "rotation rad/frame");
  synth->add_option("--scale", synth_args.scale, "zoom factor per frame");
  synth->add_option("--cy", synth_args.cy, "motion center y (default: frame center)");
  synth->add_option("--cx", synth_args.cx, "motion center x (default: frame center)");
  synth->add_option("--out", synth_args.out, "output VCLP path")->required();
  synth->add_option("--flow-out", synth_args.flow_out, "output FLOW path (default <out>.flow)");

  CompressArgs compress_args;
  auto* compress = app.add_subcommand("compress", "encode a VCLP clip into a GOPS stream");
  compress_args.config.add_options(compress);
  compress->add_option("--in", compress_args.in, "input VCLP path")->required();
  compress->add_option("--out", compress_args.out, "output GOPS path")->required();

  DecodeArgs decode_args;
  auto* decode = app.add_subcommand("decode", "reconstruct a VCLP clip from a GOPS stream");
  decode->add_option("--in", decode_args.in, "input GOPS path")->required();
  decode->add_option("--out", decode_args.out, "output VCLP path")->required();

  PretrainArgs pretrain_args;
  auto* pretrain = app.add_subcommand("pretrain-rmr", "pretrain the motion refiner on synthetic flow");
  pretrain_args.config.add_options(pretrain);
  pretrain->add_option("--clips", pretrain_args.clips, "training clips");
  pretrain->add_option("--holdout-clips", pretrain_args.holdout_clips, "held-out clips");
  pretrain->add_option("--frames", pretrain_args.frames, "frames per clip");
  pretrain->add_option("--steps", pretrain_args.steps, "gradient steps");
  pretrain->add_option("--lr", pretrain_args.lr, "learning rate");
  pretrain->add_option("--out", pretrain_args.out, "output params TNSR archive")->required();
  pretrain->add_option("--trace", pretrain_args.trace, "loss trace JSONL (default <out>.trace.jsonl)");

  AggregateArgs aggregate_args;
  auto* aggregate_cmd = app.add_subcommand("aggregate", "GOPS stream -> video feature TNSR");
  aggregate_args.config.add_options(aggregate_cmd);
  aggregate_cmd->add_option("--in", aggregate_args.in, "input GOPS path")->required();
  aggregate_cmd->add_option("--params", aggregate_args.params,
                            "refiner params archive (default: seeded random)");
  aggregate_cmd->add_option("--out", aggregate_args.out, "output TNSR path")->required();
  aggregate_cmd->add_option("--sidecar", aggregate_args.sidecar,
                            "sidecar JSON path (default <out>.json)");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "stage timing sweeps");
  bench_args.config.add_options(bench);
  bench->add_option("--stage", bench_args.stage, "stage to time")
      ->required()
      ->check(CLI::IsMember({"scan", "attention", "pipeline"}));
  bench->add_option("--sizes", bench_args.sizes, "sweep sizes (sequence lengths or GOP counts)")
      ->required()
      ->delimiter(',');
  bench->add_option("--repeats", bench_args.repeats, "timed runs per size (median reported)");
  bench->add_option("--dim", bench_args.dim, "token dimension for scan/attention stages");
  bench->add_flag("--parallel", bench_args.parallel, "allow OpenMP workers (default pins 1)");
  bench->add_option("--out", bench_args.out, "JSONL output path (default stdout)");
  bench->add_option("--csv", bench_args.csv, "plot-data CSV path");

  GradcheckArgs gradcheck_args;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of refiner gradients");
  gradcheck->add_option("--seed", gradcheck_args.seed, "RNG seed");
  gradcheck->add_option("--trials", gradcheck_args.trials, "random configurations to test");
  gradcheck
      ->add_flag("--inject-fault", gradcheck_args.inject_fault,
                 "corrupt one gradient tensor (test hook)")
      ->group("");  // hidden

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (synth->parsed()) return run_synth(synth_args);
    if (compress->parsed()) return run_compress(compress_args);
    if (decode->parsed()) return run_decode(decode_args);
    if (pretrain->parsed()) return run_pretrain(pretrain_args);
    if (aggregate_cmd->parsed()) return run_aggregate(aggregate_args);
    if (bench->parsed()) return run_bench(bench_args);
    if (gradcheck->parsed()) return run_gradcheck(gradcheck_args);
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const TrainingDivergenceError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const InvalidInputError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::bad_alloc&) {
    std::cerr << "format error: input demands an implausible allocation\n";
    return kExitFormat;
  }
  return 0;
}
