#include "remora/hmss.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <utility>

namespace remora {

PatchProjector PatchProjector::seeded(int patch, int d_s, std::uint64_t seed) {
  if (patch < 1 || d_s < 1) throw InvalidConfigError("patch_embed: degenerate dimensions");
  PatchProjector pp;
  pp.patch = patch;
  pp.d_s = d_s;
  const int in_dim = 3 * patch * patch;
  pp.w = Mat(d_s, in_dim);
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (double& x : pp.w.v) x = scale * rng.normal();
  return pp;
}

IFrameTokens PatchProjector::apply(const Frame& frame) const {
  if (frame.height % patch != 0 || frame.width % patch != 0) {
    throw InvalidInputError("patch_embed: frame not divisible by patch size");
  }
  const int rows_p = frame.height / patch;
  const int cols_p = frame.width / patch;
  const int n_p = rows_p * cols_p;
  const int in_dim = 3 * patch * patch;

  IFrameTokens out;
  out.patch = patch;
  out.frame_h = frame.height;
  out.frame_w = frame.width;
  out.tokens = Mat(n_p, d_s);

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int r = 0; r < n_p; ++r) {
    const int py = (r / cols_p) * patch;
    const int px = (r % cols_p) * patch;
    std::vector<double> flat(in_dim);
    int k = 0;
    for (int y = 0; y < patch; ++y) {
      for (int x = 0; x < patch; ++x) {
        for (int c = 0; c < 3; ++c) flat[k++] = frame.at(py + y, px + x, c) / 255.0;
      }
    }
    double* trow = out.tokens.row(r);
    for (int d = 0; d < d_s; ++d) {
      double acc = 0.0;
      const double* wrow = w.row(d);
      for (int j = 0; j < in_dim; ++j) acc += wrow[j] * flat[j];
      trow[d] = acc;
    }
  }
  return out;
}

IFrameTokens patch_embed(const Frame& frame, int patch, int d_s, std::uint64_t seed) {
  return PatchProjector::seeded(patch, d_s, seed).apply(frame);
}

GopTokenSequence assemble_gop_tokens(const IFrameTokens& iframe_tokens,
                                     const std::vector<MotionTokens>& motion_tokens,
                                     const std::vector<bool>& pad_mask) {
  if (motion_tokens.size() != pad_mask.size()) {
    throw InvalidInputError("assemble_gop_tokens: motion block count does not match pad mask");
  }
  const int n_p = iframe_tokens.tokens.rows;
  const int d_s = iframe_tokens.tokens.cols;
  const int t_g = static_cast<int>(motion_tokens.size()) + 1;
  int n_m = 0;
  for (const MotionTokens& mt : motion_tokens) {
    if (mt.m.cols != d_s) throw InvalidInputError("assemble_gop_tokens: token dim mismatch");
    if (n_m == 0) n_m = mt.m.rows;
    if (mt.m.rows != n_m) throw InvalidInputError("assemble_gop_tokens: uneven motion blocks");
  }

  GopTokenSequence seq;
  seq.n_p = n_p;
  seq.n_m = n_m;
  seq.t_g = t_g;
  seq.pad_mask = pad_mask;
  seq.tokens = Mat(n_p + (t_g - 1) * n_m, d_s);
  for (int r = 0; r < n_p; ++r) {
    std::copy(iframe_tokens.tokens.row(r), iframe_tokens.tokens.row(r) + d_s, seq.tokens.row(r));
  }
  int row = n_p;
  for (const MotionTokens& mt : motion_tokens) {
    for (int r = 0; r < n_m; ++r, ++row) {
      std::copy(mt.m.row(r), mt.m.row(r) + d_s, seq.tokens.row(row));
    }
  }
  return seq;
}

Mat local_scan(const GopTokenSequence& seq, const SelectiveParams& fwd,
               const SelectiveParams& bwd) {
  if (seq.l_g() != seq.n_p + (seq.t_g - 1) * seq.n_m) {
    throw InvalidInputError("local_scan: sequence violates the length law");
  }
  Mat x = seq.tokens;
  for (std::size_t j = 0; j < seq.pad_mask.size(); ++j) {
    if (seq.pad_mask[j]) continue;
    const int begin = seq.n_p + static_cast<int>(j) * seq.n_m;
    for (int r = begin; r < begin + seq.n_m; ++r) {
      std::fill(x.row(r), x.row(r) + x.cols, 0.0);
    }
  }
  Mat y = bidirectional(fwd, bwd, x);
  Mat out(seq.n_p, y.cols);
  for (int r = 0; r < seq.n_p; ++r) std::copy(y.row(r), y.row(r) + y.cols, out.row(r));
  return out;
}

GlobalMixer GlobalMixer::seeded(int d_s, int state_dim, int depth, Rng& rng) {
  GlobalMixer gm;
  for (int layer = 0; layer < depth; ++layer) {
    Rng f = rng.fork(2 * layer);
    Rng b = rng.fork(2 * layer + 1);
    gm.layers.emplace_back(random_selective(d_s, state_dim, f),
                           random_selective(d_s, state_dim, b));
  }
  return gm;
}

GlobalMixer GlobalMixer::feedthrough(int d_s, int state_dim, int depth) {
  GlobalMixer gm;
  for (int layer = 0; layer < depth; ++layer) {
    gm.layers.emplace_back(feedthrough_selective(d_s, state_dim),
                           zero_selective(d_s, state_dim));
  }
  return gm;
}

Mat GlobalMixer::apply(const Mat& x) const {
  Mat cur = x;
  for (const auto& [fwd, bwd] : layers) cur = bidirectional(fwd, bwd, cur);
  return cur;
}

VideoFeatures global_mix(const std::vector<Mat>& summaries, const GlobalMixer& mixer) {
  if (summaries.empty()) throw InvalidInputError("global_mix: no GOP summaries");
  const int n_p = summaries[0].rows;
  const int d_s = summaries[0].cols;
  Mat x(static_cast<int>(summaries.size()) * n_p, d_s);
  int row = 0;
  for (const Mat& s : summaries) {
    if (s.rows != n_p || s.cols != d_s) throw InvalidInputError("global_mix: shape mismatch");
    for (int r = 0; r < n_p; ++r, ++row) std::copy(s.row(r), s.row(r) + d_s, x.row(row));
  }

  VideoFeatures vf;
  vf.gop_count = static_cast<int>(summaries.size());
  vf.n_p = n_p;
  vf.features = mixer.apply(x);
  return vf;
}

HmssParams make_hmss(const PipelineConfig& cfg) {
  HmssParams hp;
  hp.patch_proj = PatchProjector::seeded(cfg.patch, cfg.d_s, cfg.seeds.embed);
  Rng rng(cfg.seeds.ssm);
  Rng f = rng.fork(1000);
  Rng b = rng.fork(1001);
  hp.local_fwd = random_selective(cfg.d_s, cfg.state_dim, f);
  hp.local_bwd = random_selective(cfg.d_s, cfg.state_dim, b);
  hp.global = GlobalMixer::seeded(cfg.d_s, cfg.state_dim, cfg.global_depth, rng);
  return hp;
}

VideoFeatures aggregate(const GopStream& stream, const RefinerParams& refiner,
                        const HmssParams& params) {
  if (stream.gops.empty()) throw InvalidInputError("aggregate: empty stream");
  const int k = stream.gop_count();
  std::vector<Mat> summaries(k);

  // Local stages are independent across GOPs; join before the global mix.
  // Exceptions may not unwind an OpenMP region, so the first failure is
  // captured and rethrown with its GOP index.
  std::exception_ptr failure;
  int failed_gop = -1;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int g = 0; g < k; ++g) {
    try {
      const Gop& gop = stream.gops[g];
      IFrameTokens itok = params.patch_proj.apply(gop.iframe);
      std::vector<MotionTokens> mtok(gop.motion.size());
      for (std::size_t t = 0; t < gop.motion.size(); ++t) {
        if (gop.pad_mask[t]) {
          mtok[t] = embed_motion(refiner, gop.motion[t]);
        } else {
          // padded entries are zeroed before the scan anyway
          mtok[t].m = Mat(refiner.cfg.n_m, refiner.cfg.d_s);
        }
      }
      GopTokenSequence seq = assemble_gop_tokens(itok, mtok, gop.pad_mask);
      summaries[g] = local_scan(seq, params.local_fwd, params.local_bwd);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      {
        if (!failure) {
          failure = std::current_exception();
          failed_gop = g;
        }
      }
    }
  }
  if (failure) {
    try {
      std::rethrow_exception(failure);
    } catch (const NumericError& e) {
      throw NumericError("GOP " + std::to_string(failed_gop) + ": " + e.what());
    } catch (const InvalidInputError& e) {
      throw InvalidInputError("GOP " + std::to_string(failed_gop) + ": " + e.what());
    }
  }

  return global_mix(summaries, params.global);
}

Mat make_prompt_projection(int d_s, int d_llm, std::uint64_t seed) {
  Mat w(d_s, d_llm);
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_s));
  for (double& x : w.v) x = scale * rng.normal();
  return w;
}

Mat project_to_prompt(const Mat& features, const Mat& projection) {
  if (features.cols != projection.rows) {
    throw InvalidInputError("project_to_prompt: dimension mismatch");
  }
  return matmul(features, projection);
}

}  // namespace remora
