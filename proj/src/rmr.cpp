#include "remora/rmr.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "remora/synthflow.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace remora {

namespace {

constexpr int kNeighborhood = 18;  // 3x3 cells, (dy, dx) each

// Fixed input scaling for the trunk; keeps tanh out of saturation for
// displacements within typical search ranges.
constexpr double kInputScale = 0.25;

void check_grid(const RefinerParams& p, const MotionField& mv) {
  if (mv.block_h != p.cfg.block_h || mv.block_w != p.cfg.block_w) {
    throw InvalidInputError("refiner: motion field block size mismatch");
  }
  if (mv.grid_h < 1 || mv.grid_w < 1) throw InvalidInputError("refiner: empty motion field");
}

// Clamp-to-edge 3x3 neighborhood of displacement pairs around cell (u, w),
// scaled by kInputScale.
void gather_neighborhood(const MotionField& mv, int u, int w, double* out) {
  int k = 0;
  for (int du = -1; du <= 1; ++du) {
    const int uu = std::clamp(u + du, 0, mv.grid_h - 1);
    for (int dw = -1; dw <= 1; ++dw) {
      const int ww = std::clamp(w + dw, 0, mv.grid_w - 1);
      out[k++] = kInputScale * static_cast<double>(mv.dy(uu, ww));
      out[k++] = kInputScale * static_cast<double>(mv.dx(uu, ww));
    }
  }
}

struct CellActivations {
  std::vector<double> x;   // 18
  std::vector<double> a1;  // hidden
  std::vector<double> a2;  // hidden
};

void trunk_forward(const RefinerParams& p, const MotionField& mv, int u, int w,
                   CellActivations& act) {
  const int h = p.cfg.hidden;
  act.x.resize(kNeighborhood);
  act.a1.resize(h);
  act.a2.resize(h);
  gather_neighborhood(mv, u, w, act.x.data());
  for (int i = 0; i < h; ++i) {
    double z = p.b1[i];
    const double* row = p.w1.row(i);
    for (int j = 0; j < kNeighborhood; ++j) z += row[j] * act.x[j];
    act.a1[i] = std::tanh(z);
  }
  if (!all_finite(act.a1.data(), act.a1.size())) {
    throw NumericError("refiner trunk: non-finite activation at layer 1");
  }
  for (int i = 0; i < h; ++i) {
    double z = p.b2[i];
    const double* row = p.w2.row(i);
    for (int j = 0; j < h; ++j) z += row[j] * act.a1[j];
    act.a2[i] = std::tanh(z);
  }
  if (!all_finite(act.a2.data(), act.a2.size())) {
    throw NumericError("refiner trunk: non-finite activation at layer 2");
  }
}

}  // namespace

RefinerParams make_refiner(const RefinerConfig& cfg, Rng& rng) {
  RefinerParams p;
  p.cfg = cfg;
  const int h = cfg.hidden;
  const int flow_out = cfg.block_h * cfg.block_w * 2;
  const int token_out = cfg.n_m * cfg.d_s;
  p.w1 = Mat(h, kNeighborhood);
  p.b1.assign(h, 0.0);
  p.w2 = Mat(h, h);
  p.b2.assign(h, 0.0);
  p.wf = Mat(flow_out, h);
  p.bf.assign(flow_out, 0.0);
  p.wt = Mat(token_out, h);
  p.bt.assign(token_out, 0.0);

  const auto init = [&rng](Mat& m, int fan_in, double gain) {
    const double a = gain / std::sqrt(static_cast<double>(fan_in));
    for (double& x : m.v) x = rng.uniform(-a, a);
  };
  // Trunk gain keeps activation energy near unity through the tanh layers;
  // the scaled sub-unit inputs would otherwise starve the heads of signal.
  init(p.w1, kNeighborhood, 3.0);
  init(p.w2, h, 3.0);
  init(p.wf, h, 1.0);
  init(p.wt, h, 1.0);
  return p;
}

RefinerParams zero_refiner(const RefinerConfig& cfg) {
  Rng rng(0);
  RefinerParams p = make_refiner(cfg, rng);
  for (double& x : p.w1.v) x = 0.0;
  for (double& x : p.w2.v) x = 0.0;
  for (double& x : p.wf.v) x = 0.0;
  for (double& x : p.wt.v) x = 0.0;
  return p;
}

DenseFlow refine_flow(const RefinerParams& p, const MotionField& mv) {
  check_grid(p, mv);
  const int bh = p.cfg.block_h, bw = p.cfg.block_w;
  DenseFlow flow(mv.grid_h * bh, mv.grid_w * bw);

  std::exception_ptr failure;
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
  for (int u = 0; u < mv.grid_h; ++u) {
    for (int w = 0; w < mv.grid_w; ++w) {
      try {
        CellActivations act;
        trunk_forward(p, mv, u, w, act);
        // flow head: per-cell block_h x block_w x 2 patch
        for (int by = 0; by < bh; ++by) {
          for (int bx = 0; bx < bw; ++bx) {
            const int base = (by * bw + bx) * 2;
            double fy = p.bf[base], fx = p.bf[base + 1];
            const double* rowy = p.wf.row(base);
            const double* rowx = p.wf.row(base + 1);
            for (int j = 0; j < p.cfg.hidden; ++j) {
              fy += rowy[j] * act.a2[j];
              fx += rowx[j] * act.a2[j];
            }
            flow.set(u * bh + by, w * bw + bx, fy, fx);
          }
        }
      } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
        {
          if (!failure) failure = std::current_exception();
        }
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  if (!all_finite(flow.v.data(), flow.v.size())) {
    throw NumericError("refine_flow: non-finite output at flow head");
  }
  return flow;
}

MotionTokens embed_motion(const RefinerParams& p, const MotionField& mv) {
  check_grid(p, mv);
  const int h = p.cfg.hidden;
  std::vector<double> pooled(h, 0.0);
  for (int u = 0; u < mv.grid_h; ++u) {
    for (int w = 0; w < mv.grid_w; ++w) {
      CellActivations act;
      trunk_forward(p, mv, u, w, act);
      for (int i = 0; i < h; ++i) pooled[i] += act.a2[i];
    }
  }
  const double inv = 1.0 / (static_cast<double>(mv.grid_h) * mv.grid_w);
  for (double& x : pooled) x *= inv;

  MotionTokens tokens;
  tokens.m = Mat(p.cfg.n_m, p.cfg.d_s);
  for (int r = 0; r < p.cfg.n_m; ++r) {
    for (int c = 0; c < p.cfg.d_s; ++c) {
      const int o = r * p.cfg.d_s + c;
      double acc = p.bt[o];
      const double* row = p.wt.row(o);
      for (int j = 0; j < h; ++j) acc += row[j] * pooled[j];
      tokens.m(r, c) = acc;
    }
  }
  return tokens;
}

double l2_loss(const DenseFlow& pred, const DenseFlow& target) {
  if (!pred.same_shape(target)) throw InvalidInputError("l2_loss: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.v.size(); ++i) {
    const double d = pred.v[i] - target.v[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.v.size());
}

RefinerGrads backward(const RefinerParams& p, const MotionField& mv, const DenseFlow& target) {
  check_grid(p, mv);
  const int bh = p.cfg.block_h, bw = p.cfg.block_w;
  if (target.height != mv.grid_h * bh || target.width != mv.grid_w * bw) {
    throw InvalidInputError("backward: target shape mismatch");
  }
  const int h = p.cfg.hidden;
  const int flow_out = bh * bw * 2;

  RefinerGrads g;
  g.w1 = Mat(h, kNeighborhood);
  g.b1.assign(h, 0.0);
  g.w2 = Mat(h, h);
  g.b2.assign(h, 0.0);
  g.wf = Mat(flow_out, h);
  g.bf.assign(flow_out, 0.0);
  g.wt = Mat(p.cfg.n_m * p.cfg.d_s, h);
  g.bt.assign(p.cfg.n_m * p.cfg.d_s, 0.0);

  const double inv_n = 1.0 / static_cast<double>(target.v.size());
  std::vector<double> df(flow_out), da2(h), dz2(h), da1(h), dz1(h);

  for (int u = 0; u < mv.grid_h; ++u) {
    for (int w = 0; w < mv.grid_w; ++w) {
      CellActivations act;
      trunk_forward(p, mv, u, w, act);

      // dL/df over this cell's patch: 2 (pred - target) / N
      for (int by = 0; by < bh; ++by) {
        for (int bx = 0; bx < bw; ++bx) {
          const int base = (by * bw + bx) * 2;
          double fy = p.bf[base], fx = p.bf[base + 1];
          const double* rowy = p.wf.row(base);
          const double* rowx = p.wf.row(base + 1);
          for (int j = 0; j < h; ++j) {
            fy += rowy[j] * act.a2[j];
            fx += rowx[j] * act.a2[j];
          }
          const int py = u * bh + by, px = w * bw + bx;
          df[base] = 2.0 * (fy - target.dy(py, px)) * inv_n;
          df[base + 1] = 2.0 * (fx - target.dx(py, px)) * inv_n;
        }
      }
      if (!all_finite(df.data(), df.size())) {
        throw NumericError("backward: non-finite gradient at flow head");
      }

      std::fill(da2.begin(), da2.end(), 0.0);
      for (int o = 0; o < flow_out; ++o) {
        const double d = df[o];
        g.bf[o] += d;
        double* grow = g.wf.row(o);
        const double* wrow = p.wf.row(o);
        for (int j = 0; j < h; ++j) {
          grow[j] += d * act.a2[j];
          da2[j] += wrow[j] * d;
        }
      }
      for (int j = 0; j < h; ++j) dz2[j] = da2[j] * (1.0 - act.a2[j] * act.a2[j]);

      std::fill(da1.begin(), da1.end(), 0.0);
      for (int i = 0; i < h; ++i) {
        const double d = dz2[i];
        g.b2[i] += d;
        double* grow = g.w2.row(i);
        const double* wrow = p.w2.row(i);
        for (int j = 0; j < h; ++j) {
          grow[j] += d * act.a1[j];
          da1[j] += wrow[j] * d;
        }
      }
      for (int j = 0; j < h; ++j) dz1[j] = da1[j] * (1.0 - act.a1[j] * act.a1[j]);

      for (int i = 0; i < h; ++i) {
        const double d = dz1[i];
        g.b1[i] += d;
        double* grow = g.w1.row(i);
        for (int j = 0; j < kNeighborhood; ++j) grow[j] += d * act.x[j];
      }
    }
  }
  return g;
}

DenseFlow upsample_baseline(const MotionField& mv) {
  DenseFlow flow(mv.grid_h * mv.block_h, mv.grid_w * mv.block_w);
  for (int u = 0; u < mv.grid_h; ++u) {
    for (int w = 0; w < mv.grid_w; ++w) {
      const double fy = -static_cast<double>(mv.dy(u, w));
      const double fx = -static_cast<double>(mv.dx(u, w));
      for (int by = 0; by < mv.block_h; ++by) {
        for (int bx = 0; bx < mv.block_w; ++bx) {
          flow.set(u * mv.block_h + by, w * mv.block_w + bx, fy, fx);
        }
      }
    }
  }
  return flow;
}

namespace {

void axpy_grads(RefinerGrads& acc, const RefinerGrads& g) {
  for (std::size_t i = 0; i < acc.w1.v.size(); ++i) acc.w1.v[i] += g.w1.v[i];
  for (std::size_t i = 0; i < acc.b1.size(); ++i) acc.b1[i] += g.b1[i];
  for (std::size_t i = 0; i < acc.w2.v.size(); ++i) acc.w2.v[i] += g.w2.v[i];
  for (std::size_t i = 0; i < acc.b2.size(); ++i) acc.b2[i] += g.b2[i];
  for (std::size_t i = 0; i < acc.wf.v.size(); ++i) acc.wf.v[i] += g.wf.v[i];
  for (std::size_t i = 0; i < acc.bf.size(); ++i) acc.bf[i] += g.bf[i];
}

}  // namespace

PretrainResult pretrain(RefinerParams init, std::span<const FlowSample> dataset, int steps,
                        double learning_rate) {
  if (dataset.empty()) throw InvalidInputError("pretrain: empty dataset");
  if (steps < 0) throw InvalidInputError("pretrain: negative step count");

  PretrainResult result;
  result.params = std::move(init);
  result.loss.reserve(steps + 1);

  const int n = static_cast<int>(dataset.size());
  const double inv_n = 1.0 / n;
  std::vector<double> sample_loss(n, 0.0);
  std::vector<RefinerGrads> sample_grads(n);

  for (int step = 0; step <= steps; ++step) {
    // Per-sample buffers then an ordered reduce keep the result independent of
    // the thread count.
    std::exception_ptr failure;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int s = 0; s < n; ++s) {
      try {
        const DenseFlow pred = refine_flow(result.params, dataset[s].first);
        sample_loss[s] = l2_loss(pred, dataset[s].second);
        if (step < steps && learning_rate != 0.0) {
          sample_grads[s] = backward(result.params, dataset[s].first, dataset[s].second);
        }
      } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
        {
          if (!failure) failure = std::current_exception();
        }
      }
    }
    if (failure) {
      try {
        std::rethrow_exception(failure);
      } catch (const NumericError& e) {
        throw TrainingDivergenceError(std::string("pretrain: ") + e.what());
      }
    }

    double batch_loss = 0.0;
    for (int s = 0; s < n; ++s) batch_loss += sample_loss[s];
    batch_loss *= inv_n;
    result.loss.push_back(batch_loss);
    if (batch_loss > 1e6) throw TrainingDivergenceError("pretrain: loss exceeded 1e6");
    if (step == steps) break;
    if (learning_rate == 0.0) continue;

    RefinerGrads total = sample_grads[0];
    for (int s = 1; s < n; ++s) axpy_grads(total, sample_grads[s]);

    RefinerParams& p = result.params;
    const double lr = learning_rate * inv_n;
    for (std::size_t i = 0; i < p.w1.v.size(); ++i) p.w1.v[i] -= lr * total.w1.v[i];
    for (std::size_t i = 0; i < p.b1.size(); ++i) p.b1[i] -= lr * total.b1[i];
    for (std::size_t i = 0; i < p.w2.v.size(); ++i) p.w2.v[i] -= lr * total.w2.v[i];
    for (std::size_t i = 0; i < p.b2.size(); ++i) p.b2[i] -= lr * total.b2[i];
    for (std::size_t i = 0; i < p.wf.v.size(); ++i) p.wf.v[i] -= lr * total.wf.v[i];
    for (std::size_t i = 0; i < p.bf.size(); ++i) p.bf[i] -= lr * total.bf[i];
  }
  return result;
}

double mean_epe_refined(const RefinerParams& p, std::span<const FlowSample> dataset) {
  if (dataset.empty()) throw InvalidInputError("mean_epe_refined: empty dataset");
  double acc = 0.0;
  for (const auto& [mv, target] : dataset) acc += endpoint_error(refine_flow(p, mv), target);
  return acc / static_cast<double>(dataset.size());
}

double mean_epe_baseline(std::span<const FlowSample> dataset) {
  if (dataset.empty()) throw InvalidInputError("mean_epe_baseline: empty dataset");
  double acc = 0.0;
  for (const auto& [mv, target] : dataset) acc += endpoint_error(upsample_baseline(mv), target);
  return acc / static_cast<double>(dataset.size());
}

}  // namespace remora
