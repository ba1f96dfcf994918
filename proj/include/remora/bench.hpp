#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "remora/common.hpp"

namespace remora {

struct BenchRecord {
  std::string stage;
  long long size = 0;
  double median_seconds = 0.0;
  long long peak_bytes = 0;
  double tokens_per_second = 0.0;  // 0 when not applicable
};

// Naive quadratic softmax aggregation: every pairwise similarity is computed;
// rows are materialized in bounded blocks so long sweeps stay in memory.
// y_i = sum_j softmax_j(x_i . x_j / sqrt(d)) x_j.
Mat attention_mix(const Mat& x);

// Median wall-clock seconds over `repeats` timed runs after one warmup.
double time_median(const std::function<void()>& fn, int repeats);

// Max resident set so far (getrusage; monotone, approximate).
long long peak_rss_bytes();

// t(2L)/t(L) for consecutive entries of a sweep ordered by size.
std::vector<double> doubling_ratios(const std::vector<BenchRecord>& records);

// One timed point of the linear-scan/quadratic-attention contrast: seeded
// random tokens, median over `repeats` timed runs. `inner` executions are
// batched per timed run (and divided out) so millisecond-scale kernels do not
// drown in timer noise.
BenchRecord bench_selective_scan(int len, int dim, int state_dim, int repeats,
                                 std::uint64_t seed, int inner = 1);
BenchRecord bench_attention(int len, int dim, int repeats, std::uint64_t seed);

}  // namespace remora
