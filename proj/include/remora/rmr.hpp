#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "remora/codec.hpp"
#include "remora/common.hpp"
#include "remora/video.hpp"

namespace remora {

struct RefinerConfig {
  int hidden = 32;   // h_r
  int block_h = 4;
  int block_w = 4;
  int n_m = 16;      // motion tokens per inter frame
  int d_s = 32;      // token embedding dim
};

// Two tanh layers over each cell's 3x3 displacement neighborhood (18 inputs,
// clamp-to-edge at grid borders, scaled by a fixed 0.25), a flow head emitting
// the cell's block_h x block_w x 2 flow patch, and a token head over
// mean-pooled trunk features.
struct RefinerParams {
  RefinerConfig cfg;
  Mat w1;                   // hidden x 18
  std::vector<double> b1;   // hidden
  Mat w2;                   // hidden x hidden
  std::vector<double> b2;   // hidden
  Mat wf;                   // (block_h*block_w*2) x hidden
  std::vector<double> bf;
  Mat wt;                   // (n_m*d_s) x hidden
  std::vector<double> bt;
};

struct RefinerGrads {
  Mat w1;
  std::vector<double> b1;
  Mat w2;
  std::vector<double> b2;
  Mat wf;
  std::vector<double> bf;
  Mat wt;  // zero: the token head is outside the flow loss
  std::vector<double> bt;
};

struct MotionTokens {
  Mat m;  // n_m x d_s
};

RefinerParams make_refiner(const RefinerConfig& cfg, Rng& rng);
RefinerParams zero_refiner(const RefinerConfig& cfg);

// Pixel-resolution flow assembled from per-cell flow-head patches.
DenseFlow refine_flow(const RefinerParams& p, const MotionField& mv);

// Token head over grid-mean trunk features.
MotionTokens embed_motion(const RefinerParams& p, const MotionField& mv);

// Mean squared difference over all pixel components.
double l2_loss(const DenseFlow& pred, const DenseFlow& target);

// Analytic reverse-mode gradients of l2_loss(refine_flow(p, mv), target).
RefinerGrads backward(const RefinerParams& p, const MotionField& mv, const DenseFlow& target);

// Every pixel inherits its block's displacement, negated into flow convention
// (flow = -displacement: displacement points current -> reference, flow points
// frame t-1 -> t).
DenseFlow upsample_baseline(const MotionField& mv);

using FlowSample = std::pair<MotionField, DenseFlow>;

struct PretrainResult {
  RefinerParams params;
  std::vector<double> loss;  // loss[s] = batch loss before step s; loss[steps] = final
};

// Full-batch gradient descent with a fixed step. Deterministic for a given
// initial parameter draw regardless of thread count (per-sample gradient
// buffers, ordered reduction).
PretrainResult pretrain(RefinerParams init, std::span<const FlowSample> dataset, int steps,
                        double learning_rate);

double mean_epe_refined(const RefinerParams& p, std::span<const FlowSample> dataset);
double mean_epe_baseline(std::span<const FlowSample> dataset);

}  // namespace remora
