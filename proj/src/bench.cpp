#include "remora/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <sys/resource.h>

#include "remora/ssm.hpp"

namespace remora {

Mat attention_mix(const Mat& x) {
  const int len = x.rows;
  const int dim = x.cols;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(dim));
  Mat y(len, dim);

  constexpr int kRowBlock = 128;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int i0 = 0; i0 < len; i0 += kRowBlock) {
    const int i1 = std::min(len, i0 + kRowBlock);
    std::vector<double> scores(static_cast<std::size_t>(i1 - i0) * len);
    for (int i = i0; i < i1; ++i) {
      double* srow = scores.data() + static_cast<std::size_t>(i - i0) * len;
      const double* xi = x.row(i);
      double max_s = -1e300;
      for (int j = 0; j < len; ++j) {
        const double* xj = x.row(j);
        double dot = 0.0;
        for (int d = 0; d < dim; ++d) dot += xi[d] * xj[d];
        srow[j] = dot * inv_sqrt_d;
        max_s = std::max(max_s, srow[j]);
      }
      double denom = 0.0;
      for (int j = 0; j < len; ++j) {
        srow[j] = std::exp(srow[j] - max_s);
        denom += srow[j];
      }
      const double inv_denom = 1.0 / denom;
      double* yrow = y.row(i);
      for (int j = 0; j < len; ++j) {
        const double wgt = srow[j] * inv_denom;
        const double* xj = x.row(j);
        for (int d = 0; d < dim; ++d) yrow[d] += wgt * xj[d];
      }
    }
  }
  return y;
}

double time_median(const std::function<void()>& fn, int repeats) {
  if (repeats < 1) throw InvalidInputError("time_median: repeats must be >= 1");
  fn();  // warmup
  std::vector<double> times(repeats);
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    times[r] = std::chrono::duration<double>(t1 - t0).count();
  }
  std::sort(times.begin(), times.end());
  const int mid = repeats / 2;
  return repeats % 2 == 1 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
}

long long peak_rss_bytes() {
  struct rusage usage;
  getrusage(RUSAGE_SELF, &usage);
  return static_cast<long long>(usage.ru_maxrss) * 1024;  // ru_maxrss is in KB on Linux
}

std::vector<double> doubling_ratios(const std::vector<BenchRecord>& records) {
  std::vector<double> ratios;
  for (std::size_t i = 1; i < records.size(); ++i) {
    ratios.push_back(records[i].median_seconds / records[i - 1].median_seconds);
  }
  return ratios;
}

namespace {

Mat random_tokens(int len, int dim, std::uint64_t seed) {
  Mat x(len, dim);
  Rng rng(seed);
  for (double& v : x.v) v = rng.normal();
  return x;
}

}  // namespace

BenchRecord bench_selective_scan(int len, int dim, int state_dim, int repeats,
                                 std::uint64_t seed, int inner) {
  if (inner < 1) throw InvalidInputError("bench_selective_scan: inner must be >= 1");
  const Mat x = random_tokens(len, dim, seed);
  Rng rng(seed ^ 0x5ca1ab1eULL);
  const SelectiveParams sp = random_selective(dim, state_dim, rng);
  volatile double sink = 0.0;
  const double median = time_median(
                            [&] {
                              for (int r = 0; r < inner; ++r) {
                                Mat y = selective_scan(sp, x);
                                sink = sink + y(len - 1, 0);
                              }
                            },
                            repeats) /
                        inner;
  return BenchRecord{"scan", len, median, peak_rss_bytes(),
                     median > 0.0 ? static_cast<double>(len) / median : 0.0};
}

BenchRecord bench_attention(int len, int dim, int repeats, std::uint64_t seed) {
  const Mat x = random_tokens(len, dim, seed);
  volatile double sink = 0.0;
  const double median = time_median(
      [&] {
        Mat y = attention_mix(x);
        sink = sink + y(len - 1, 0);
      },
      repeats);
  return BenchRecord{"attention", len, median, peak_rss_bytes(),
                     median > 0.0 ? static_cast<double>(len) / median : 0.0};
}

}  // namespace remora
