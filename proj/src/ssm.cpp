#include "remora/ssm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace remora {

namespace {

double inf_norm(const Mat& m) {
  double best = 0.0;
  for (int i = 0; i < m.rows; ++i) {
    double row = 0.0;
    for (int j = 0; j < m.cols; ++j) row += std::abs(m(i, j));
    best = std::max(best, row);
  }
  return best;
}

// Gaussian elimination with partial pivoting; rhs columns solved in place.
Mat solve(Mat a, Mat rhs) {
  const int n = a.rows;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    }
    if (a(pivot, col) == 0.0) throw NumericError("solve: singular matrix");
    if (pivot != col) {
      for (int j = 0; j < n; ++j) std::swap(a(col, j), a(pivot, j));
      for (int j = 0; j < rhs.cols; ++j) std::swap(rhs(col, j), rhs(pivot, j));
    }
    const double inv = 1.0 / a(col, col);
    for (int r = col + 1; r < n; ++r) {
      const double f = a(r, col) * inv;
      if (f == 0.0) continue;
      for (int j = col; j < n; ++j) a(r, j) -= f * a(col, j);
      for (int j = 0; j < rhs.cols; ++j) rhs(r, j) -= f * rhs(col, j);
    }
  }
  for (int col = n - 1; col >= 0; --col) {
    const double inv = 1.0 / a(col, col);
    for (int j = 0; j < rhs.cols; ++j) {
      double acc = rhs(col, j);
      for (int k = col + 1; k < n; ++k) acc -= a(col, k) * rhs(k, j);
      rhs(col, j) = acc * inv;
    }
  }
  return rhs;
}

// phi1(z) = (e^z - 1)/z with the series limit near zero.
double phi1(double z) {
  if (std::abs(z) < 1e-6) return 1.0 + z / 2.0 + z * z / 6.0;
  return std::expm1(z) / z;
}

void check_finite(const std::vector<double>& v, const char* what) {
  if (!all_finite(v.data(), v.size())) throw NumericError(std::string(what) + ": non-finite result");
}

}  // namespace

Mat expm(const Mat& m) {
  if (m.rows != m.cols) throw InvalidInputError("expm: matrix not square");
  const int n = m.rows;

  // Pade [7/7] is accurate to double precision for ||A||inf <= 0.95.
  int squarings = 0;
  double norm = inf_norm(m);
  while (norm > 0.9) {
    norm /= 2.0;
    ++squarings;
  }
  Mat a = m;
  const double scale = std::ldexp(1.0, -squarings);
  for (double& x : a.v) x *= scale;

  static const double b[8] = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                              25200.0,    1512.0,    56.0,      1.0};
  const Mat a2 = matmul(a, a);
  const Mat a4 = matmul(a2, a2);
  const Mat a6 = matmul(a4, a2);

  Mat u_inner(n, n), v(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double id = i == j ? 1.0 : 0.0;
      u_inner(i, j) = b[7] * a6(i, j) + b[5] * a4(i, j) + b[3] * a2(i, j) + b[1] * id;
      v(i, j) = b[6] * a6(i, j) + b[4] * a4(i, j) + b[2] * a2(i, j) + b[0] * id;
    }
  }
  const Mat u = matmul(a, u_inner);

  Mat p(n, n), q(n, n);
  for (std::size_t i = 0; i < p.v.size(); ++i) {
    p.v[i] = v.v[i] + u.v[i];
    q.v[i] = v.v[i] - u.v[i];
  }
  Mat e = solve(std::move(q), std::move(p));
  for (int s = 0; s < squarings; ++s) e = matmul(e, e);
  return e;
}

DiscreteSsm discretize(const SsmParams& params) {
  const int q = params.state_dim();
  if (q < 1) throw InvalidInputError("discretize: empty state");
  if (!(params.delta > 0.0)) throw InvalidInputError("discretize: delta must be positive");
  if (static_cast<int>(params.b.size()) != q || static_cast<int>(params.c.size()) != q) {
    throw InvalidInputError("discretize: B/C dimension mismatch");
  }

  DiscreteSsm out;
  out.diagonal = params.diagonal;
  out.c = params.c;
  out.d = params.d;

  if (params.diagonal) {
    out.a_bar = Mat(q, q);
    out.b_bar.assign(q, 0.0);
    for (int i = 0; i < q; ++i) {
      const double z = params.delta * params.a(i, i);
      out.a_bar(i, i) = std::exp(z);
      out.b_bar[i] = params.delta * phi1(z) * params.b[i];
    }
  } else {
    Mat da = params.a;
    for (double& x : da.v) x *= params.delta;
    out.a_bar = expm(da);
    if (inf_norm(da) < 1e-6) {
      // series limit: delta (I + dA/2! + (dA)^2/3!) B
      std::vector<double> acc = params.b;
      const Mat da2 = matmul(da, da);
      const std::vector<double> t1 = matvec(da, params.b);
      const std::vector<double> t2 = matvec(da2, params.b);
      for (int i = 0; i < q; ++i) acc[i] += t1[i] / 2.0 + t2[i] / 6.0;
      out.b_bar.assign(q, 0.0);
      for (int i = 0; i < q; ++i) out.b_bar[i] = params.delta * acc[i];
    } else {
      Mat rhs(q, 1);
      std::vector<double> db(q);
      for (int i = 0; i < q; ++i) db[i] = params.delta * params.b[i];
      for (int i = 0; i < q; ++i) {
        double acc = -db[i];
        for (int k = 0; k < q; ++k) acc += out.a_bar(i, k) * db[k];
        rhs(i, 0) = acc;  // (A_bar - I) delta B
      }
      Mat x = solve(da, std::move(rhs));
      out.b_bar.assign(q, 0.0);
      for (int i = 0; i < q; ++i) out.b_bar[i] = x(i, 0);
    }
  }

  if (!all_finite(out.a_bar) || !all_finite(out.b_bar.data(), out.b_bar.size())) {
    throw NumericError("discretize: non-finite result");
  }
  return out;
}

std::vector<double> scan(const DiscreteSsm& d, std::span<const double> x,
                         std::span<const double> h0) {
  const int q = d.state_dim();
  std::vector<double> h(q, 0.0);
  if (!h0.empty()) {
    if (static_cast<int>(h0.size()) != q) throw InvalidInputError("scan: h0 dimension mismatch");
    h.assign(h0.begin(), h0.end());
  }

  std::vector<double> y(x.size(), 0.0);
  std::vector<double> hn(q, 0.0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (d.diagonal) {
      for (int i = 0; i < q; ++i) h[i] = d.a_bar(i, i) * h[i] + d.b_bar[i] * x[j];
    } else {
      for (int i = 0; i < q; ++i) {
        double acc = d.b_bar[i] * x[j];
        for (int k = 0; k < q; ++k) acc += d.a_bar(i, k) * h[k];
        hn[i] = acc;
      }
      std::swap(h, hn);
    }
    double out = d.d * x[j];
    for (int i = 0; i < q; ++i) out += d.c[i] * h[i];
    y[j] = out;
  }
  check_finite(y, "scan");
  return y;
}

std::vector<double> kernel(const DiscreteSsm& d, int len) {
  if (len < 1) throw InvalidInputError("kernel: length must be >= 1");
  const int q = d.state_dim();
  std::vector<double> v = d.b_bar;  // A_bar^i B_bar
  std::vector<double> vn(q, 0.0);
  std::vector<double> k(len, 0.0);
  for (int i = 0; i < len; ++i) {
    double acc = d.d;
    for (int j = 0; j < q; ++j) acc += d.c[j] * v[j];
    k[i] = acc;
    if (i + 1 == len) break;
    if (d.diagonal) {
      for (int j = 0; j < q; ++j) v[j] *= d.a_bar(j, j);
    } else {
      for (int r = 0; r < q; ++r) {
        double s = 0.0;
        for (int c2 = 0; c2 < q; ++c2) s += d.a_bar(r, c2) * v[c2];
        vn[r] = s;
      }
      std::swap(v, vn);
    }
  }
  check_finite(k, "kernel");
  return k;
}

std::vector<double> conv_apply(std::span<const double> kbar, std::span<const double> x) {
  std::vector<double> y(x.size(), 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::size_t j = 0; j < x.size(); ++j) {
    double acc = 0.0;
    const std::size_t taps = std::min(j + 1, kbar.size());
    for (std::size_t i = 0; i < taps; ++i) acc += kbar[i] * x[j - i];
    y[j] = acc;
  }
  return y;
}

SelectiveParams random_selective(int feature_dim, int state_dim, Rng& rng) {
  SelectiveParams sp;
  sp.feature_dim = feature_dim;
  sp.state_dim = state_dim;
  sp.a = Mat(feature_dim, state_dim);
  sp.d.resize(feature_dim);
  sp.w_delta = Mat(feature_dim, feature_dim);
  sp.b_delta.resize(feature_dim);
  sp.w_b = Mat(state_dim, feature_dim);
  sp.b_b.resize(state_dim);
  sp.w_c = Mat(state_dim, feature_dim);
  sp.b_c.resize(state_dim);

  const double proj_scale = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  for (int c = 0; c < feature_dim; ++c) {
    for (int q = 0; q < state_dim; ++q) sp.a(c, q) = -rng.uniform(0.25, 1.5);
    sp.d[c] = 0.5 * rng.normal();
    sp.b_delta[c] = rng.uniform(-0.5, 1.0);
    for (int j = 0; j < feature_dim; ++j) sp.w_delta(c, j) = 0.25 * proj_scale * rng.normal();
  }
  for (int q = 0; q < state_dim; ++q) {
    sp.b_b[q] = 0.1 * rng.normal();
    sp.b_c[q] = 0.1 * rng.normal();
    for (int j = 0; j < feature_dim; ++j) {
      sp.w_b(q, j) = proj_scale * rng.normal();
      sp.w_c(q, j) = proj_scale * rng.normal();
    }
  }
  return sp;
}

SelectiveParams feedthrough_selective(int feature_dim, int state_dim) {
  SelectiveParams sp;
  sp.feature_dim = feature_dim;
  sp.state_dim = state_dim;
  sp.a = Mat(feature_dim, state_dim);
  for (int c = 0; c < feature_dim; ++c) {
    for (int q = 0; q < state_dim; ++q) sp.a(c, q) = -1.0;
  }
  sp.d.assign(feature_dim, 1.0);
  sp.w_delta = Mat(feature_dim, feature_dim);
  sp.b_delta.assign(feature_dim, 0.0);
  sp.w_b = Mat(state_dim, feature_dim);
  sp.b_b.assign(state_dim, 0.0);
  sp.w_c = Mat(state_dim, feature_dim);
  sp.b_c.assign(state_dim, 0.0);
  return sp;
}

SelectiveParams zero_selective(int feature_dim, int state_dim) {
  SelectiveParams sp = feedthrough_selective(feature_dim, state_dim);
  sp.d.assign(feature_dim, 0.0);
  return sp;
}

namespace {

struct SelectivePrecomp {
  Mat delta_raw;  // L x d_s
  Mat bt;         // L x Q
  Mat ct;         // L x Q
};

SelectivePrecomp precompute_projections(const SelectiveParams& sp, const Mat& x) {
  const int len = x.rows;
  SelectivePrecomp pre{Mat(len, sp.feature_dim), Mat(len, sp.state_dim), Mat(len, sp.state_dim)};
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int t = 0; t < len; ++t) {
    const double* xt = x.row(t);
    for (int c = 0; c < sp.feature_dim; ++c) {
      double acc = sp.b_delta[c];
      const double* wrow = sp.w_delta.row(c);
      for (int j = 0; j < sp.feature_dim; ++j) acc += wrow[j] * xt[j];
      pre.delta_raw(t, c) = acc;
    }
    for (int q = 0; q < sp.state_dim; ++q) {
      double accb = sp.b_b[q], accc = sp.b_c[q];
      const double* wb = sp.w_b.row(q);
      const double* wc = sp.w_c.row(q);
      for (int j = 0; j < sp.feature_dim; ++j) {
        accb += wb[j] * xt[j];
        accc += wc[j] * xt[j];
      }
      pre.bt(t, q) = accb;
      pre.ct(t, q) = accc;
    }
  }
  return pre;
}

// One channel of the recurrence; shared by the reference and OpenMP paths so
// they are arithmetically identical.
void scan_channel(const SelectiveParams& sp, const Mat& x, const SelectivePrecomp& pre, int c,
                  Mat& y, long long* bad_step) {
  const int len = x.rows;
  const int q = sp.state_dim;
  double h[64];  // Q <= 64 is plenty for this artifact
  for (int i = 0; i < q; ++i) h[i] = 0.0;
  const double* arow = sp.a.row(c);
  for (int t = 0; t < len; ++t) {
    const double xt = x(t, c);
    const double dt = softplus(pre.delta_raw(t, c));
    double acc = 0.0;
    for (int i = 0; i < q; ++i) {
      const double z = dt * arow[i];
      const double abar = std::exp(z);
      const double bbar = dt * phi1(z) * pre.bt(t, i);
      h[i] = abar * h[i] + bbar * xt;
      acc += pre.ct(t, i) * h[i];
    }
    const double out = acc + sp.d[c] * xt;
    if (!std::isfinite(out)) {
      *bad_step = t;
      return;
    }
    y(t, c) = out;
  }
}

void validate_selective(const SelectiveParams& sp, const Mat& x) {
  if (x.cols != sp.feature_dim) throw InvalidInputError("selective_scan: token dim mismatch");
  if (sp.state_dim < 1 || sp.state_dim > 64) {
    throw InvalidConfigError("selective_scan: state dim out of range");
  }
}

}  // namespace

Mat selective_scan_ref(const SelectiveParams& sp, const Mat& x) {
  validate_selective(sp, x);
  const SelectivePrecomp pre = precompute_projections(sp, x);
  Mat y(x.rows, x.cols);
  long long bad = -1;
  for (int c = 0; c < sp.feature_dim; ++c) {
    scan_channel(sp, x, pre, c, y, &bad);
    if (bad >= 0) {
      throw NumericError("selective_scan: non-finite output at step " + std::to_string(bad));
    }
  }
  return y;
}

Mat selective_scan(const SelectiveParams& sp, const Mat& x) {
  validate_selective(sp, x);
  const SelectivePrecomp pre = precompute_projections(sp, x);
  Mat y(x.rows, x.cols);
  std::atomic<long long> bad{-1};
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int c = 0; c < sp.feature_dim; ++c) {
    long long bad_step = -1;
    scan_channel(sp, x, pre, c, y, &bad_step);
    if (bad_step >= 0) bad.store(bad_step);
  }
  if (bad.load() >= 0) {
    throw NumericError("selective_scan: non-finite output at step " + std::to_string(bad.load()));
  }
  return y;
}

namespace {

Mat reverse_rows(const Mat& x) {
  Mat out(x.rows, x.cols);
  for (int r = 0; r < x.rows; ++r) {
    const double* src = x.row(x.rows - 1 - r);
    std::copy(src, src + x.cols, out.row(r));
  }
  return out;
}

}  // namespace

Mat bidirectional(const SelectiveParams& fwd, const SelectiveParams& bwd, const Mat& x) {
  Mat yf = selective_scan(fwd, x);
  Mat yb = reverse_rows(selective_scan(bwd, reverse_rows(x)));
  for (std::size_t i = 0; i < yf.v.size(); ++i) yf.v[i] += yb.v[i];
  return yf;
}

void affine_scan_seq(const double* a, const double* b, int len, int q, const double* h0,
                     double* h_out) {
  std::vector<double> h(h0, h0 + q);
  for (int t = 0; t < len; ++t) {
    const double* at = a + static_cast<std::size_t>(t) * q;
    const double* bt = b + static_cast<std::size_t>(t) * q;
    double* ht = h_out + static_cast<std::size_t>(t) * q;
    for (int i = 0; i < q; ++i) {
      h[i] = at[i] * h[i] + bt[i];
      ht[i] = h[i];
    }
  }
}

void affine_scan_omp(const double* a, const double* b, int len, int q, const double* h0,
                     double* h_out) {
#ifndef _OPENMP
  affine_scan_seq(a, b, len, q, h0, h_out);
  return;
#else
  const int max_threads = omp_get_max_threads();
  if (max_threads <= 1 || len < 4 * max_threads || q > 64) {
    affine_scan_seq(a, b, len, q, h0, h_out);
    return;
  }

  const int chunks = max_threads;
  const int chunk_len = (len + chunks - 1) / chunks;
  // Per-chunk composed affine map: h_end = comp_a (.) h_start + comp_b.
  std::vector<double> comp_a(static_cast<std::size_t>(chunks) * q, 1.0);
  std::vector<double> comp_b(static_cast<std::size_t>(chunks) * q, 0.0);
  std::vector<double> start_state(static_cast<std::size_t>(chunks) * q, 0.0);

#pragma omp parallel num_threads(chunks)
  {
    const int tid = omp_get_thread_num();
    const int begin = tid * chunk_len;
    const int end = std::min(len, begin + chunk_len);
    // local accumulators; writing the shared arrays per step would false-share
    double ca[64], cb[64];
    for (int i = 0; i < q; ++i) {
      ca[i] = 1.0;
      cb[i] = 0.0;
    }
    for (int t = begin; t < end; ++t) {
      const double* at = a + static_cast<std::size_t>(t) * q;
      const double* bt = b + static_cast<std::size_t>(t) * q;
      for (int i = 0; i < q; ++i) {
        ca[i] = at[i] * ca[i];
        // long contractive products underflow into denormals and stall;
        // anything this small contributes nothing at double precision
        if (std::abs(ca[i]) < 1e-280) ca[i] = 0.0;
        cb[i] = at[i] * cb[i] + bt[i];
      }
    }
    for (int i = 0; i < q; ++i) {
      comp_a[static_cast<std::size_t>(tid) * q + i] = ca[i];
      comp_b[static_cast<std::size_t>(tid) * q + i] = cb[i];
    }

#pragma omp barrier
#pragma omp single
    {
      std::vector<double> carry(h0, h0 + q);
      for (int ck = 0; ck < chunks; ++ck) {
        double* ss = start_state.data() + static_cast<std::size_t>(ck) * q;
        const double* ka = comp_a.data() + static_cast<std::size_t>(ck) * q;
        const double* kb = comp_b.data() + static_cast<std::size_t>(ck) * q;
        for (int i = 0; i < q; ++i) {
          ss[i] = carry[i];
          carry[i] = ka[i] * carry[i] + kb[i];
        }
      }
    }

    // implicit barrier after single
    if (begin < len) {
      affine_scan_seq(a + static_cast<std::size_t>(begin) * q,
                      b + static_cast<std::size_t>(begin) * q, end - begin, q,
                      start_state.data() + static_cast<std::size_t>(tid) * q,
                      h_out + static_cast<std::size_t>(begin) * q);
    }
  }
#endif
}

}  // namespace remora
