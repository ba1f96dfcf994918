#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace remora {

struct InvalidInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainingDivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deterministic, platform-independent RNG (splitmix64 core). std::mt19937
// plus <random> distributions would tie generated artifacts to the standard
// library implementation; byte-identical artifacts across builds need the
// whole sampling path pinned.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed + 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive bounds
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Independent deterministic substream.
  Rng fork(std::uint64_t stream) const {
    Rng r(state_ ^ (0x632be59bd9b4e019ULL * (stream + 1)));
    r.next_u64();
    return r;
  }

 private:
  std::uint64_t state_;
};

// Minimal dense row-major matrix; the token/parameter workhorse.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }

  double* row(int r) { return v.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.row(k);
      double* orow = out.row(i);
      for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

inline std::vector<double> matvec(const Mat& m, const std::vector<double>& x) {
  std::vector<double> out(m.rows, 0.0);
  for (int i = 0; i < m.rows; ++i) {
    double acc = 0.0;
    const double* row = m.row(i);
    for (int j = 0; j < m.cols; ++j) acc += row[j] * x[j];
    out[i] = acc;
  }
  return out;
}

inline bool all_finite(const double* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(p[i])) return false;
  }
  return true;
}

inline bool all_finite(const Mat& m) { return all_finite(m.v.data(), m.v.size()); }

inline double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

}  // namespace remora
