#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "remora/common.hpp"

namespace remora {

// Continuous-time system dh/dt = A h + B x, y = C h + D x with timescale
// delta. A may be dense or diagonal (diagonal = only a(i,i) is read).
struct SsmParams {
  Mat a;                  // Q x Q
  bool diagonal = true;
  std::vector<double> b;  // Q
  std::vector<double> c;  // Q
  double d = 0.0;
  double delta = 1.0;

  int state_dim() const { return a.rows; }
};

struct DiscreteSsm {
  Mat a_bar;              // Q x Q
  bool diagonal = true;
  std::vector<double> b_bar;
  std::vector<double> c;
  double d = 0.0;

  int state_dim() const { return a_bar.rows; }
};

// Zero-order hold: A_bar = exp(delta A), B_bar = (delta A)^-1 (A_bar - I) delta B,
// with the convergent series delta (I + dA/2! + (dA)^2/3! + ...) B when
// ||delta A|| < 1e-6. Dense path uses scaling-and-squaring with a Pade
// approximant; diagonal path is elementwise.
DiscreteSsm discretize(const SsmParams& params);

// Left-to-right recurrence h_j = A_bar h_{j-1} + B_bar x_j, y_j = C h_j + D x_j.
std::vector<double> scan(const DiscreteSsm& d, std::span<const double> x,
                         std::span<const double> h0 = {});

// K_bar = (C B_bar + D, C A_bar B_bar + D, ..., C A_bar^{L-1} B_bar + D).
// D rides on every tap; see conv_apply.
std::vector<double> kernel(const DiscreteSsm& d, int len);

// Causal convolution y_j = sum_{i<=j} K_i x_{j-i}. With the kernel above, the
// feedthrough D accumulates over the input prefix rather than applying once;
// equality with scan() therefore holds exactly when D = 0, and in general
// conv - scan = D * sum_{m<j} x_m.
std::vector<double> conv_apply(std::span<const double> kbar, std::span<const double> x);

// Matrix exponential, scaling-and-squaring with Pade [7/7]. Exposed for tests.
Mat expm(const Mat& m);

// Input-conditioned per-channel systems: shared diagonal A (one Q-row per
// channel), per-step delta/B/C projected from the token.
struct SelectiveParams {
  int feature_dim = 0;  // d_s
  int state_dim = 0;    // Q
  Mat a;                // d_s x Q, negative real diagonals per channel
  std::vector<double> d;        // d_s
  Mat w_delta;                  // d_s x d_s
  std::vector<double> b_delta;  // d_s; delta_t = softplus(W x_t + b)
  Mat w_b;                      // Q x d_s
  std::vector<double> b_b;      // Q
  Mat w_c;                      // Q x d_s
  std::vector<double> b_c;      // Q
};

// Stable random draw: A diagonals in [-1.5, -0.25], unit-scaled projections.
SelectiveParams random_selective(int feature_dim, int state_dim, Rng& rng);

// Pure feedthrough: y = x (D = 1, zero state/output projections).
SelectiveParams feedthrough_selective(int feature_dim, int state_dim);

// All-zero output path: y = 0 for any input.
SelectiveParams zero_selective(int feature_dim, int state_dim);

// Sequential reference; the normative semantics.
Mat selective_scan_ref(const SelectiveParams& sp, const Mat& x);

// OpenMP over channels; arithmetic per channel identical to the reference.
Mat selective_scan(const SelectiveParams& sp, const Mat& x);

// selective_scan(fwd, X) + reverse(selective_scan(bwd, reverse(X))).
Mat bidirectional(const SelectiveParams& fwd, const SelectiveParams& bwd, const Mat& x);

// Diagonal affine recurrence h_t = a_t (.) h_{t-1} + b_t over L steps of Q-dim
// state. a, b, h_out are L x Q row-major. The OpenMP variant is the two-pass
// chunked scan; it matches the sequential result to ~1e-8 (FP reassociation).
void affine_scan_seq(const double* a, const double* b, int len, int q, const double* h0,
                     double* h_out);
void affine_scan_omp(const double* a, const double* b, int len, int q, const double* h0,
                     double* h_out);

}  // namespace remora
