#include <doctest.h>

#include <cmath>
#include <vector>

#include "remora/ssm.hpp"
#include "oracles.hpp"

using namespace remora;

namespace {

SsmParams scalar_params(double a, double b, double c, double d, double delta) {
  SsmParams p;
  p.a = Mat(1, 1);
  p.a(0, 0) = a;
  p.diagonal = true;
  p.b = {b};
  p.c = {c};
  p.d = d;
  p.delta = delta;
  return p;
}

DiscreteSsm direct_discrete(double a_bar, double b_bar, double c, double d) {
  DiscreteSsm ds;
  ds.a_bar = Mat(1, 1);
  ds.a_bar(0, 0) = a_bar;
  ds.diagonal = true;
  ds.b_bar = {b_bar};
  ds.c = {c};
  ds.d = d;
  return ds;
}

SsmParams random_stable(Rng& rng, int q, bool diagonal) {
  SsmParams p;
  p.diagonal = diagonal;
  p.a = Mat(q, q);
  if (diagonal) {
    for (int i = 0; i < q; ++i) p.a(i, i) = -rng.uniform(0.05, 2.0);
  } else {
    // diagonally dominant with negative diagonal => eigenvalues in the left
    // half plane
    for (int i = 0; i < q; ++i) {
      double off = 0.0;
      for (int j = 0; j < q; ++j) {
        if (i == j) continue;
        p.a(i, j) = rng.uniform(-0.2, 0.2);
        off += std::abs(p.a(i, j));
      }
      p.a(i, i) = -(off + rng.uniform(0.1, 1.5));
    }
  }
  p.b.resize(q);
  p.c.resize(q);
  for (int i = 0; i < q; ++i) {
    p.b[i] = rng.normal();
    p.c[i] = rng.normal();
  }
  p.d = rng.normal();
  p.delta = rng.uniform(0.05, 1.0);
  return p;
}

double rel_dev(const std::vector<double>& got, const std::vector<double>& want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    num = std::max(num, std::abs(got[i] - want[i]));
    den = std::max(den, std::abs(want[i]));
  }
  return den > 0.0 ? num / den : num;
}

}  // namespace

TEST_CASE("discretize: A -> 0 limit gives A_bar = 1, B_bar = delta B") {
  const DiscreteSsm d = discretize(scalar_params(0.0, 1.0, 1.0, 0.0, 0.5));
  CHECK(d.a_bar(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.b_bar[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("discretize: closed-form scalar A=-1, delta=ln2") {
  const DiscreteSsm d = discretize(scalar_params(-1.0, 1.0, 1.0, 0.0, std::log(2.0)));
  CHECK(d.a_bar(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d.b_bar[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("discretize: diagonal closed forms") {
  SsmParams p;
  p.diagonal = true;
  p.a = Mat(2, 2);
  p.a(0, 0) = -1.0;
  p.a(1, 1) = -2.0;
  p.b = {1.0, 1.0};
  p.c = {1.0, 1.0};
  p.delta = std::log(2.0);
  const DiscreteSsm d = discretize(p);
  CHECK(d.a_bar(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d.a_bar(1, 1) == doctest::Approx(0.25).epsilon(1e-12));
  // elementwise closed form: (e^z - 1)/z * delta * b
  CHECK(d.b_bar[0] == doctest::Approx((std::exp(-std::log(2.0)) - 1.0) / -1.0).epsilon(1e-12));
  CHECK(d.b_bar[1] ==
        doctest::Approx((std::exp(-2.0 * std::log(2.0)) - 1.0) / -2.0).epsilon(1e-12));
}

TEST_CASE("discretize: dense path agrees with a similarity-transformed diagonal") {
  // A = P D P^-1 with P = [[1,1],[0,1]]: exp(dA) = P exp(dD) P^-1
  const double d1 = -0.4, d2 = -1.3, delta = 0.7;
  SsmParams p;
  p.diagonal = false;
  p.a = Mat(2, 2);
  p.a(0, 0) = d1;
  p.a(0, 1) = d2 - d1;
  p.a(1, 1) = d2;
  p.b = {0.3, -0.8};
  p.c = {1.0, 0.5};
  p.delta = delta;
  const DiscreteSsm d = discretize(p);

  const double e1 = std::exp(delta * d1), e2 = std::exp(delta * d2);
  CHECK(d.a_bar(0, 0) == doctest::Approx(e1).epsilon(1e-12));
  CHECK(d.a_bar(0, 1) == doctest::Approx(e2 - e1).epsilon(1e-12));
  CHECK(d.a_bar(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(d.a_bar(1, 1) == doctest::Approx(e2).epsilon(1e-12));

  // B_bar via the scalar phi1 forms in the eigenbasis
  const double phi1_1 = (e1 - 1.0) / (delta * d1);
  const double phi1_2 = (e2 - 1.0) / (delta * d2);
  // P^-1 B = (B0 - B1, B1)
  const double pb0 = p.b[0] - p.b[1], pb1 = p.b[1];
  const double want0 = delta * (phi1_1 * pb0 + phi1_2 * pb1);
  const double want1 = delta * (phi1_2 * pb1);
  CHECK(d.b_bar[0] == doctest::Approx(want0).epsilon(1e-10));
  CHECK(d.b_bar[1] == doctest::Approx(want1).epsilon(1e-10));
}

TEST_CASE("discretize: rejects non-positive delta") {
  CHECK_THROWS_AS(discretize(scalar_params(-1.0, 1.0, 1.0, 0.0, 0.0)), InvalidInputError);
}

TEST_CASE("discretize: overflow surfaces as a numeric error") {
  CHECK_THROWS_AS(discretize(scalar_params(1000.0, 1.0, 1.0, 0.0, 1.0)), NumericError);
}

TEST_CASE("expm: identity and known scalar") {
  Mat z(3, 3);
  const Mat e = expm(z);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(e(i, j) == doctest::Approx(i == j ? 1.0 : 0.0));
  }
  Mat big(1, 1);
  big(0, 0) = 3.7;  // forces scaling-and-squaring
  CHECK(expm(big)(0, 0) == doctest::Approx(std::exp(3.7)).epsilon(1e-13));
}

TEST_CASE("scan: zeros, hand recurrence, feedthrough, empty") {
  const DiscreteSsm d = direct_discrete(0.5, 0.5, 1.0, 0.0);

  const std::vector<double> zeros(8, 0.0);
  for (double y : scan(d, zeros)) CHECK(y == 0.0);

  const std::vector<double> impulse{1.0, 0.0, 0.0};
  const auto y = scan(d, impulse);
  CHECK(y[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(y[1] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(y[2] == doctest::Approx(0.125).epsilon(1e-15));

  const DiscreteSsm feed = direct_discrete(0.0, 0.0, 1.0, 1.0);
  const std::vector<double> x{0.3, -1.2, 2.0, 0.7};
  CHECK(scan(feed, x) == x);

  CHECK(scan(d, std::vector<double>{}).empty());
}

TEST_CASE("scan: accepts an initial state") {
  const DiscreteSsm d = direct_discrete(0.5, 0.0, 1.0, 0.0);
  const std::vector<double> h0{2.0};
  const auto y = scan(d, std::vector<double>{0.0, 0.0}, h0);
  CHECK(y[0] == doctest::Approx(1.0));
  CHECK(y[1] == doctest::Approx(0.5));
}

TEST_CASE("kernel: direct powers and degenerate cases") {
  const DiscreteSsm d = direct_discrete(0.5, 0.5, 1.0, 0.0);
  const auto k = kernel(d, 3);
  CHECK(k == std::vector<double>{0.5, 0.25, 0.125});

  const DiscreteSsm feed = direct_discrete(0.5, 0.0, 1.0, 1.0);
  for (double v : kernel(feed, 4)) CHECK(v == 1.0);

  const DiscreteSsm one = direct_discrete(0.9, 0.3, 2.0, 0.25);
  CHECK(kernel(one, 1) == std::vector<double>{0.3 * 2.0 + 0.25});

  CHECK_THROWS_AS(kernel(d, 0), InvalidInputError);
}

TEST_CASE("conv_apply: impulse response and zeros") {
  const std::vector<double> k{0.5, 0.25, 0.125};
  std::vector<double> impulse{1.0, 0.0, 0.0};
  CHECK(conv_apply(k, impulse) == k);
  const std::vector<double> zeros(5, 0.0);
  for (double v : conv_apply(k, zeros)) CHECK(v == 0.0);
}

TEST_CASE("scan-convolution duality for D = 0 systems") {
  Rng rng(100);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    SsmParams p = random_stable(rng, rng.uniform_int(1, 8), trial % 2 == 0);
    p.d = 0.0;
    const DiscreteSsm d = discretize(p);
    const int len = rng.uniform_int(4, 128);
    std::vector<double> x(len);
    for (double& v : x) v = rng.normal();
    const auto via_scan = scan(d, x);
    const auto via_conv = conv_apply(kernel(d, len), x);
    worst = std::max(worst, rel_dev(via_conv, via_scan));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("kernel D-fold: conv - scan equals D * prefix_sum(x) shifted") {
  Rng rng(101);
  for (int trial = 0; trial < 10; ++trial) {
    SsmParams p = random_stable(rng, 3, true);
    REQUIRE(p.d != 0.0);
    const DiscreteSsm d = discretize(p);
    const int len = 32;
    std::vector<double> x(len);
    for (double& v : x) v = rng.normal();
    const auto via_scan = scan(d, x);
    const auto via_conv = conv_apply(kernel(d, len), x);
    const auto psum = oracles::prefix_sum(x);
    for (int j = 0; j < len; ++j) {
      const double want = j == 0 ? 0.0 : p.d * psum[j - 1];
      CHECK(via_conv[j] - via_scan[j] == doctest::Approx(want).epsilon(1e-9));
    }
  }
}

TEST_CASE("selective_scan: constant projections reduce to the LTI scan") {
  const int d_s = 3, q = 2, len = 24;
  Rng rng(102);
  SelectiveParams sp = zero_selective(d_s, q);
  for (int c = 0; c < d_s; ++c) {
    for (int i = 0; i < q; ++i) sp.a(c, i) = -rng.uniform(0.2, 1.2);
    sp.d[c] = rng.normal();
    sp.b_delta[c] = rng.uniform(-0.3, 0.8);
  }
  for (int i = 0; i < q; ++i) {
    sp.b_b[i] = rng.normal();
    sp.b_c[i] = rng.normal();
  }
  Mat x(len, d_s);
  for (double& v : x.v) v = rng.normal();
  const Mat y = selective_scan_ref(sp, x);

  for (int c = 0; c < d_s; ++c) {
    SsmParams p;
    p.diagonal = true;
    p.a = Mat(q, q);
    for (int i = 0; i < q; ++i) p.a(i, i) = sp.a(c, i);
    p.b = sp.b_b;
    p.c = sp.b_c;
    p.d = sp.d[c];
    p.delta = softplus(sp.b_delta[c]);
    const DiscreteSsm d = discretize(p);
    std::vector<double> xc(len);
    for (int t = 0; t < len; ++t) xc[t] = x(t, c);
    const auto yc = scan(d, xc);
    for (int t = 0; t < len; ++t) {
      CHECK(std::abs(y(t, c) - yc[t]) <= 1e-12 * std::max(1.0, std::abs(yc[t])));
    }
  }
}

TEST_CASE("selective_scan: zero input with zero-bias projections stays zero") {
  SelectiveParams sp = zero_selective(4, 3);
  sp.d.assign(4, 0.7);  // feedthrough present but input is zero
  Mat x(10, 4);
  const Mat y = selective_scan_ref(sp, x);
  for (double v : y.v) CHECK(v == 0.0);
}

TEST_CASE("selective_scan: matches the straight-line oracle") {
  Rng rng(103);
  SelectiveParams sp = random_selective(4, 2, rng);
  Mat x(8, 4);
  for (double& v : x.v) v = rng.normal();
  const Mat got = selective_scan_ref(sp, x);
  const Mat want = oracles::selective_scan_oracle(sp, x);
  for (std::size_t i = 0; i < got.v.size(); ++i) {
    CHECK(got.v[i] == doctest::Approx(want.v[i]).epsilon(1e-12));
  }
}

TEST_CASE("selective_scan: OpenMP channel split reproduces the reference") {
  Rng rng(104);
  SelectiveParams sp = random_selective(8, 4, rng);
  Mat x(200, 8);
  for (double& v : x.v) v = rng.normal();
  const Mat ref = selective_scan_ref(sp, x);
  const Mat par = selective_scan(sp, x);
  for (std::size_t i = 0; i < ref.v.size(); ++i) {
    CHECK(std::abs(ref.v[i] - par.v[i]) <= 1e-8 * std::max(1.0, std::abs(ref.v[i])));
  }
}

TEST_CASE("selective_scan: non-finite state reports the step index") {
  SelectiveParams sp = feedthrough_selective(2, 2);
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < 2; ++i) sp.a(c, i) = 200.0;  // wildly unstable
  }
  for (int i = 0; i < 2; ++i) {
    sp.b_b[i] = 1.0;
    sp.b_c[i] = 1.0;
  }
  Mat x(64, 2);
  for (double& v : x.v) v = 1e12;
  CHECK_THROWS_AS(selective_scan_ref(sp, x), NumericError);
}

TEST_CASE("affine_scan: OpenMP two-pass matches sequential within 1e-8") {
  Rng rng(105);
  const int len = 5000, q = 3;
  std::vector<double> a(len * q), b(len * q), h0(q, 0.5);
  for (auto& v : a) v = rng.uniform(0.3, 0.999);
  for (auto& v : b) v = rng.normal();
  std::vector<double> seq(len * q), par(len * q);
  affine_scan_seq(a.data(), b.data(), len, q, h0.data(), seq.data());
  affine_scan_omp(a.data(), b.data(), len, q, h0.data(), par.data());
  for (int i = 0; i < len * q; ++i) {
    CHECK(std::abs(seq[i] - par[i]) <= 1e-8 * std::max(1.0, std::abs(seq[i])));
  }
}

TEST_CASE("bidirectional: zero backward path reduces to the forward scan") {
  Rng rng(106);
  SelectiveParams fwd = random_selective(3, 2, rng);
  SelectiveParams bwd = zero_selective(3, 2);
  Mat x(12, 3);
  for (double& v : x.v) v = rng.normal();
  const Mat combined = bidirectional(fwd, bwd, x);
  const Mat forward_only = selective_scan_ref(fwd, x);
  for (std::size_t i = 0; i < combined.v.size(); ++i) {
    CHECK(combined.v[i] == doctest::Approx(forward_only.v[i]).epsilon(1e-14));
  }
}

TEST_CASE("bidirectional: reverse-swap symmetry") {
  Rng rng(107);
  SelectiveParams f = random_selective(3, 2, rng);
  SelectiveParams b = random_selective(3, 2, rng);
  Mat x(10, 3);
  for (double& v : x.v) v = rng.normal();

  Mat rx(10, 3);
  for (int r = 0; r < 10; ++r) {
    for (int c = 0; c < 3; ++c) rx(r, c) = x(9 - r, c);
  }
  const Mat lhs = bidirectional(f, b, rx);
  const Mat rhs = bidirectional(b, f, x);
  for (int r = 0; r < 10; ++r) {
    for (int c = 0; c < 3; ++c) {
      CHECK(lhs(r, c) == doctest::Approx(rhs(9 - r, c)).epsilon(1e-12));
    }
  }
}

TEST_CASE("bidirectional: zero input gives zero output") {
  Rng rng(108);
  SelectiveParams f = random_selective(2, 2, rng);
  SelectiveParams b = random_selective(2, 2, rng);
  Mat x(6, 2);
  const Mat y = bidirectional(f, b, x);
  for (double v : y.v) CHECK(v == 0.0);
}

TEST_CASE("stability: stable systems obey the geometric-series bound") {
  Rng rng(109);
  for (int trial = 0; trial < 20; ++trial) {
    SsmParams p = random_stable(rng, rng.uniform_int(1, 4), true);
    const DiscreteSsm d = discretize(p);
    const int len = 256;
    std::vector<double> x(len);
    double xmax = 0.0;
    for (double& v : x) {
      v = rng.uniform(-2.0, 2.0);
      xmax = std::max(xmax, std::abs(v));
    }
    // per-state bound |h_i| <= |B_i| X / (1 - |A_ii|), then |y| through C, D
    double bound = std::abs(d.d) * xmax;
    for (int i = 0; i < d.state_dim(); ++i) {
      const double rho = std::abs(d.a_bar(i, i));
      REQUIRE(rho < 1.0);
      bound += std::abs(d.c[i]) * std::abs(d.b_bar[i]) * xmax / (1.0 - rho);
    }
    for (double y : scan(d, x)) CHECK(std::abs(y) <= bound + 1e-12);
  }
}
