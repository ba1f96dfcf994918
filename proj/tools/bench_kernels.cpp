// Compares the serial reference kernels against their OpenMP variants:
// wall time, speedup, and max deviation. The serial implementations are the
// normative semantics; the parallel ones must reproduce them.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "remora/bench.hpp"
#include "remora/codec.hpp"
#include "remora/ssm.hpp"
#include "remora/synthflow.hpp"

using namespace remora;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename F>
double time_best_of_3(F&& fn) {
  double best = 1e300;
  for (int r = 0; r < 3; ++r) {
    const double t0 = now_seconds();
    fn();
    best = std::min(best, now_seconds() - t0);
  }
  return best;
}

void report(const char* name, double serial_s, double parallel_s, double max_dev) {
  std::printf("%-24s serial %10.4f ms   omp %10.4f ms   speedup %5.2fx   max|dev| %.3e\n", name,
              serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s, max_dev);
}

void bench_affine_scan() {
  const int len = 1 << 20;
  const int q = 4;
  Rng rng(11);
  std::vector<double> a(static_cast<std::size_t>(len) * q), b(a.size());
  for (auto& x : a) x = rng.uniform(0.5, 0.999);  // contractive, stays bounded
  for (auto& x : b) x = rng.normal();
  std::vector<double> h0(q, 0.0), out_seq(a.size()), out_omp(a.size());

  const double ts = time_best_of_3([&] { affine_scan_seq(a.data(), b.data(), len, q, h0.data(), out_seq.data()); });
  const double tp = time_best_of_3([&] { affine_scan_omp(a.data(), b.data(), len, q, h0.data(), out_omp.data()); });

  double dev = 0.0;
  for (std::size_t i = 0; i < out_seq.size(); ++i) {
    dev = std::max(dev, std::abs(out_seq[i] - out_omp[i]));
  }
  report("affine_scan L=2^20 Q=4", ts, tp, dev);
}

void bench_selective() {
  const int len = 1 << 14;
  const int dim = 16;
  Rng rng(12);
  Mat x(len, dim);
  for (auto& v : x.v) v = rng.normal();
  const SelectiveParams sp = random_selective(dim, 4, rng);

  Mat y_ref, y_omp;
  const double ts = time_best_of_3([&] { y_ref = selective_scan_ref(sp, x); });
  const double tp = time_best_of_3([&] { y_omp = selective_scan(sp, x); });

  double dev = 0.0;
  for (std::size_t i = 0; i < y_ref.v.size(); ++i) {
    dev = std::max(dev, std::abs(y_ref.v[i] - y_omp.v[i]));
  }
  report("selective_scan L=2^14", ts, tp, dev);
}

void bench_block_match() {
  MotionSpec spec;
  spec.kind = MotionKind::Translate;
  spec.ty = 1.0;
  spec.tx = -2.0;
  const RenderResult rr = render_clip(spec, 2, 256, 256, 13);

  MotionField mv_omp;
  const double tp = time_best_of_3(
      [&] { mv_omp = block_match(rr.clip.frames[1], rr.clip.frames[0], 4, 4, 8); });

  // single-thread run of the same kernel as the serial reference
#ifdef _OPENMP
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
#endif
  MotionField mv_seq;
  const double ts = time_best_of_3(
      [&] { mv_seq = block_match(rr.clip.frames[1], rr.clip.frames[0], 4, 4, 8); });
#ifdef _OPENMP
  omp_set_num_threads(saved);
#endif

  double dev = 0.0;
  for (std::size_t i = 0; i < mv_seq.v.size(); ++i) {
    dev = std::max(dev, static_cast<double>(std::abs(mv_seq.v[i] - mv_omp.v[i])));
  }
  report("block_match 256x256 r=8", ts, tp, dev);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP not enabled; parallel variants run serially\n");
#endif
  bench_affine_scan();
  bench_selective();
  bench_block_match();
  return 0;
}
