#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "dno/cs.hpp"
#include "oracles.hpp"

using namespace dno;

namespace {

// Dense Fourier-space reference for the expansion of a band-limited f, built from operator
// products on the index window |k| ≤ W with exact convolutions (no grid, no FFT).
struct DenseReference {
  int W;
  PrecisionCtx ctx;
  using Mat = std::vector<std::vector<MpComplex>>;  // [k + W][j + W]

  Mat zero() const { return Mat(2 * W + 1, std::vector<MpComplex>(2 * W + 1, MpComplex(ctx))); }
  Mat diag(const std::function<MpReal(int)>& s) const {
    Mat m = zero();
    for (int k = -W; k <= W; ++k) m[k + W][k + W] = MpComplex(s(k));
    return m;
  }
  Mat mul(const Mat& a, const Mat& b) const {
    Mat c = zero();
    for (int i = 0; i <= 2 * W; ++i)
      for (int l = 0; l <= 2 * W; ++l) {
        if (a[i][l].is_zero()) continue;
        for (int j = 0; j <= 2 * W; ++j)
          if (!b[l][j].is_zero()) c[i][j] += a[i][l] * b[l][j];
      }
    return c;
  }
  Mat add(const Mat& a, const Mat& b, const MpReal& s) const {  // a + s b
    Mat c = a;
    for (int i = 0; i <= 2 * W; ++i)
      for (int j = 0; j <= 2 * W; ++j) c[i][j] += b[i][j] * s;
    return c;
  }
  /// Toeplitz matrix of multiplication by g with modes gh (|k| ≤ band).
  Mat toeplitz(const std::map<int, MpComplex>& gh) const {
    Mat m = zero();
    for (int k = -W; k <= W; ++k)
      for (int j = -W; j <= W; ++j) {
        auto it = gh.find(k - j);
        if (it != gh.end()) m[k + W][j + W] = it->second;
      }
    return m;
  }
};

std::map<int, MpComplex> power_modes(const WaveProfile& f, int n) {
  std::map<int, MpComplex> p{{0, MpComplex(MpReal(f.ctx(), 1))}};
  for (int m = 0; m < n; ++m) {
    std::map<int, MpComplex> q;
    for (const auto& [a, za] : p)
      for (int b = -f.kmax(); b <= f.kmax(); ++b) {
        MpComplex fb = f.coeff(b);
        if (fb.is_zero()) continue;
        auto [it, fresh] = q.try_emplace(a + b, f.ctx());
        it->second += za * fb;
      }
    p = std::move(q);
  }
  return p;
}

MpReal factorial(const PrecisionCtx& ctx, int n) {
  MpReal r(ctx, 1);
  for (int i = 2; i <= n; ++i) r *= static_cast<long>(i);
  return r;
}

// G_n via the unabsorbed recursion (infinite depth) or the operator form of A_n (finite depth).
std::vector<DenseReference::Mat> dense_terms(const WaveProfile& f, int n_max, int W) {
  PrecisionCtx ctx = f.ctx();
  DenseReference R{W, ctx};
  const Depth& dep = f.depth();
  auto T = [&](int k) { return dep.is_infinite() ? MpReal(ctx, 1) : tanh(MpReal(ctx, dep.h()) * static_cast<long>(std::abs(k))); };
  auto absd = [&](int p) { return R.diag([=](int k) { return pow(MpReal(ctx, std::abs(k)), static_cast<long>(p)); }); };
  auto D = R.diag([&](int k) { return MpReal(ctx, k); });
  auto TD = R.diag([&](int k) { return T(k); });
  auto G0 = R.diag([&](int k) { return MpReal(ctx, std::abs(k)) * T(k); });
  auto Y = [&](int s) { return s % 2 ? R.mul(absd(s), TD) : absd(s); };
  std::vector<DenseReference::Mat> G{G0};
  for (int n = 1; n <= n_max; ++n) {
    auto Fn = R.toeplitz(power_modes(f, n));
    MpReal inv_fact = MpReal(ctx, 1) / factorial(ctx, n);
    DenseReference::Mat g;
    if (dep.is_infinite()) {
      // |D|^{n−1} D f^n D / n! − Σ_{s=0}^{n−1} |D|^{n−s} f^{n−s} G_s / (n−s)!
      g = R.mul(R.mul(R.mul(absd(n - 1), D), Fn), D);
      g = R.add(R.zero(), g, inv_fact);
      for (int s = 0; s < n; ++s) {
        auto t = R.mul(R.mul(absd(n - s), R.toeplitz(power_modes(f, n - s))), G[s]);
        g = R.add(g, t, -(MpReal(ctx, 1) / factorial(ctx, n - s)));
      }
    } else {
      DenseReference::Mat inner;
      if (n % 2 == 0) inner = R.add(R.mul(R.mul(R.mul(TD, D), Fn), D), R.mul(R.mul(absd(1), Fn), G0), MpReal(ctx, -1));
      else inner = R.add(R.mul(R.mul(D, Fn), D), R.mul(R.mul(G0, Fn), G0), MpReal(ctx, -1));
      g = R.add(R.zero(), R.mul(absd(n - 1), inner), inv_fact);
      for (int s = 1; s < n; ++s) {
        auto t = R.mul(R.mul(Y(n - s), R.toeplitz(power_modes(f, n - s))), G[s]);
        g = R.add(g, t, -(MpReal(ctx, 1) / factorial(ctx, n - s)));
      }
    }
    G.push_back(std::move(g));
  }
  return G;
}

}  // namespace

TEST_CASE("A_n entries by hand") {
  PrecisionCtx ctx(100);
  WaveProfile cosx({{1, MpComplex(ctx, 0.5)}}, Depth::infinite(), ldexp(pi(ctx), 1));
  CsEngine e(cosx, 3, 32, false);
  SUBCASE("A_1 vanishes for cos x") {
    for (int k = -15; k < 16; ++k)
      for (int j = -15; j < 16; ++j) CHECK(abs(e.a_entry(1, k, j)) < oracle::ulp_scale(ctx, 8));
  }
  SUBCASE("A_2 at (-1, 1)") {
    MpComplex a = e.a_entry(2, -1, 1);
    CHECK(abs(a - MpComplex(ctx, -0.25)) < 1e-28);
    CHECK(e.a_entry(2, 1, 1).is_zero());
    CHECK(e.a_entry(2, 1, -1) == conj(a));
  }
  SUBCASE("finite depth is not quadrant-zeroed") {
    MpReal h(ctx, 1.2);
    WaveProfile f({{0, MpComplex(ctx, 0.3)}, {1, MpComplex(ctx, 0.5)}}, Depth::finite(h), ldexp(pi(ctx), 1));
    CsEngine ef(f, 2, 32, false);
    MpReal t = tanh(h);
    MpReal expect = (MpReal(ctx, 1) - t * t) * MpReal(ctx, 0.3);
    CHECK(abs(ef.a_entry(1, 1, 1).re - expect) < 1e-28);
  }
}

TEST_CASE("low-order terms") {
  PrecisionCtx ctx(120);
  SUBCASE("G_0 is the flat-surface symbol") {
    for (Depth d : {Depth::infinite(), Depth::finite(MpReal(ctx, 0.4))}) {
      WaveProfile f = random_bandlimited(3, MpReal(ctx, 0.1), 2, d);
      CsTerms t = gn_recursion(f, 1, 32, 16, false);
      for (int j = 0; j < 8; ++j)
        for (int k = -15; k < 16; ++k) {
          MpReal expect = k == j ? MpReal(ctx, j) * (d.is_infinite() ? MpReal(ctx, 1) : tanh(d.h() * static_cast<long>(j)))
                                 : MpReal(ctx);
          CHECK(abs(t.g[0].entry(k, j) - MpComplex(expect)) < oracle::ulp_scale(ctx, 4));
        }
    }
  }
  SUBCASE("G_1(cos x) vanishes at infinite depth") {
    WaveProfile cosx({{1, MpComplex(ctx, 0.5)}}, Depth::infinite(), ldexp(pi(ctx), 1));
    CsTerms t = gn_recursion(cosx, 1, 32, 32, false);
    for (int j = 0; j < 16; ++j)
      for (int k = -15; k < 16; ++k) CHECK(abs(t.g[1].entry(k, j)) < oracle::ulp_scale(ctx, 8));
  }
  SUBCASE("G_1 = D f D − G_0 f G_0") {
    for (Depth d : {Depth::infinite(), Depth::finite(MpReal(ctx, 0.4))}) {
      WaveProfile f = random_bandlimited(4, MpReal(ctx, 0.2), 9, d);
      CsTerms t = gn_recursion(f, 1, 32, 32, false);
      auto g0 = [&](int k) { return MpReal(ctx, std::abs(k)) * (d.is_infinite() ? MpReal(ctx, 1) : tanh(d.h() * static_cast<long>(std::abs(k)))); };
      for (int j = -15; j < 16; ++j)
        for (int k = -15; k < 16; ++k) {
          MpComplex expect = f.coeff(k - j) * (MpReal(ctx, k) * MpReal(ctx, j) - g0(k) * g0(j));
          if (std::abs(k - j) > 4) expect = MpComplex(ctx);
          CHECK(abs(t.g[1].entry(k, j) - expect) < oracle::ulp_scale(ctx, 10));
        }
    }
  }
}

TEST_CASE("recursion matches dense operator products") {
  PrecisionCtx ctx(160);
  const int n_max = 5, M = 64, W = 40;
  for (Depth d : {Depth::infinite(), Depth::finite(MpReal(ctx, 0.6))}) {
    WaveProfile f = random_bandlimited(3, MpReal(ctx, 0.25), 17, d);
    auto ref = dense_terms(f, n_max, W);
    CsTerms t = gn_recursion(f, n_max, M, 12, false);
    for (int n = 0; n <= n_max; ++n) {
      MpReal scale(ctx), err(ctx);
      for (int j = 0; j < 6; ++j)
        for (int k = -20; k <= 20; ++k) {
          scale = max(scale, abs(ref[n][k + W][j + W]));
          err = max(err, abs(t.g[n].entry(k, j) - ref[n][k + W][j + W]));
        }
      CAPTURE(n);
      CHECK(err <= scale * oracle::ulp_scale(ctx, 20));
    }
  }
}

TEST_CASE("parallel and serial recursions agree bit for bit") {
  PrecisionCtx ctx(90);
  WaveProfile f = example_profile(ExampleKind::analytic, ctx, 32);
  CsTerms a = gn_recursion(f, 6, 32, 16, false), b = gn_recursion_serial(f, 6, 32, 16, false);
  for (int n = 0; n <= 6; ++n)
    for (int j = 0; j < 8; ++j) CHECK(a.g[n].column(j) == b.g[n].column(j));
}

TEST_CASE("homogeneity: G_n(λf) = λ^n G_n(f)") {
  PrecisionCtx ctx(128);
  for (Depth d : {Depth::infinite(), Depth::finite(MpReal(ctx, 1.1))}) {
    WaveProfile f = random_bandlimited(3, MpReal(ctx, 0.3), 4, d);
    MpReal lambda(ctx, 0.37);
    CsTerms a = gn_recursion(f, 6, 32, 16, false), b = gn_recursion(f.scaled(lambda), 6, 32, 16, false);
    for (int n = 0; n <= 6; ++n) {
      MpReal ln = pow(lambda, static_cast<long>(n));
      MpReal scale(ctx), err(ctx);
      for (int j = 0; j < 8; ++j)
        for (int k = -15; k < 16; ++k) {
          scale = max(scale, abs(a.g[n].entry(k, j)) * ln);
          err = max(err, abs(b.g[n].entry(k, j) - a.g[n].entry(k, j) * ln));
        }
      CHECK(err <= scale * ldexp(MpReal(ctx, 1), -ctx.bits() / 2));
    }
  }
}

TEST_CASE("band-limited zero pattern and self-adjointness") {
  PrecisionCtx ctx(256);
  WaveProfile f = example_profile(ExampleKind::bandlimited, ctx);
  const int n_max = 12, M = 64, K = 32;
  CsEngine raw(f, n_max, M, false), filt(f, n_max, M, true);
  CHECK(raw.pattern().single_harmonic);
  CHECK(raw.pattern().parity);
  SUBCASE("unfiltered entries in the pattern are roundoff") {
    CsTerms t = gn_recursion(f, n_max, M, K, false);
    for (int n = 1; n <= n_max; ++n) {
      MpReal big(ctx), small(ctx);
      for (int j = 0; j < K / 2; ++j)
        for (int k = -M / 2 + 1; k < M / 2; ++k) {
          MpReal v = abs(t.g[n].entry(k, j));
          if (raw.pattern().zero(n, k, j)) small = max(small, v);
          else big = max(big, v);
        }
      CAPTURE(n);
      if (n > 1) CHECK(big > 0);  // G_1 of a single harmonic vanishes identically
      CHECK(small <= max(big, MpReal(ctx, 1)) * ldexp(MpReal(ctx, 1), -200));
    }
  }
  SUBCASE("r_n") {
    CancellationReport r = cancellation_report(filt, K);
    CHECK(r.r[0].is_zero());
    for (int n = 1; n <= n_max; ++n) CHECK(r.r[n] < 1e-60);
    CHECK_FALSE(r.noise_flagged());
    CHECK(r.tail_log10 < -60);  // only FFT roundoff beyond the band
    CancellationReport u = cancellation_report(raw, K);
    for (int n = 1; n <= n_max; ++n) CHECK(u.r[n] < 1e-60);
  }
}

TEST_CASE("Frobenius norms") {
  PrecisionCtx ctx(120);
  WaveProfile f = example_profile(ExampleKind::analytic, ctx, 64);
  CsEngine e(f, 6, 64, false);
  CancellationReport r = cancellation_report(e, 16, false, MpReal(ctx, 0.5));
  for (int n = 1; n <= 6; ++n) {
    // Direct sum over the quadrant k < 0 < j, doubled.
    MpReal s(ctx);
    for (int j = 1; j < 32; ++j)
      for (int k = -31; k < 0; ++k)
        if (j - k < 32) s += norm(e.a_entry(n, k, j));
    CHECK(abs(r.norm_a[n] - sqrt(2L * s)) <= r.norm_a[n] * oracle::ulp_scale(ctx, 12));
    CHECK(abs(r.scaled_norm_a(n) - r.norm_a[n] * pow(MpReal(ctx, 0.5), static_cast<long>(n))) < r.norm_a[n] * MpReal(ctx, 1e-30));
    // ‖G_n‖ from the explicit matrix.
    CsTerms t = gn_recursion(f, n, 64, 16, false);
    MpReal g(ctx);
    for (int j = 1; j < 8; ++j)
      for (int k = -7; k < 8; ++k) g += norm(t.g[n].entry(k, j));
    CHECK(abs(r.norm_g[n] - sqrt(2L * g)) <= r.norm_g[n] * oracle::ulp_scale(ctx, 12));
  }
}

TEST_CASE("vector recursion equals column assembly") {
  PrecisionCtx ctx(140);
  for (Depth d : {Depth::infinite(), Depth::finite(MpReal(ctx, 0.8))}) {
    WaveProfile f = random_bandlimited(3, MpReal(ctx, 0.2), 21, d);
    CsEngine e(f, 5, 32, false);
    WaveProfile dwave = random_bandlimited(6, MpReal(ctx, 1), 22, Depth::infinite());
    ModeVector v = dwave.folded_modes(32);
    auto a = e.apply(v), b = gn_apply_columns(e, v, 32);
    CsTerms t = gn_recursion(f, 5, 32, 32, false);
    for (int n = 0; n <= 5; ++n) {
      ModeVector c = t.g[n].apply(v);
      for (int i = 0; i < 32; ++i) {
        CHECK(abs(a[n][i] - b[n][i]) < oracle::ulp_scale(ctx, 24));
        CHECK(abs(c[i] - b[n][i]) < oracle::ulp_scale(ctx, 24));
      }
    }
  }
}

TEST_CASE("partial sums") {
  SUBCASE("flat surface: E^(0) vanishes") {
    PrecisionCtx ctx(100);
    MpReal h(ctx, 1);
    WaveProfile flat = WaveProfile::flat(Depth::finite(h), ctx);
    Grid g(32, ctx);
    SurfaceField dir = SurfaceField::from_function(g, [](const MpReal& x) { return cos(x); });
    std::vector<MpReal> nm;
    for (int j = 0; j < 32; ++j) nm.push_back(tanh(h) * cos(g.x(j)));
    CsEngine e(flat, 3, 32, false);
    PartialSumErrors err = apply_partial_sum(e.apply(dir.modes()), nm, 10);
    for (const auto& r : err.rms) CHECK(r < oracle::ulp_scale(ctx, 6));
  }
  SUBCASE("pole pair converges below the cutoff") {
    PrecisionCtx ctx(120);
    ExactPair p = polepair_exact(MpReal(ctx, 0.5), MpReal(ctx), Depth::infinite());
    const int M = 64, n_max = 30;
    Grid g(M, ctx);
    SurfaceField dir = p.dirichlet_on(g);
    std::vector<MpReal> nm = p.neumann_on(g).values();
    CsEngine e(p.profile, n_max, M, false);
    PartialSumErrors err = apply_partial_sum(gn_apply_columns(e, dir.modes(), M), nm, 16);
    auto low = [&](int n) {
      MpReal s(ctx);
      for (int k = -15; k < 16; ++k) s += norm(err.spectra[n][mode_index(k, M)]);
      return sqrt(s);
    };
    CHECK(err.rms[0] > 0.01);
    CHECK(low(n_max) < low(0) * MpReal(ctx, 1e-8));
    CHECK(low(n_max) < low(n_max / 2));
    // What remains is the n = 0 residual of the frozen modes.
    CHECK(err.rms[n_max] < err.rms[0] * MpReal(ctx, 1e-4));
    // Frozen modes keep their n = 0 residual.
    CHECK(err.spectra[n_max][20] == err.spectra[0][20]);
    CHECK(err.spectra[n_max][3] != err.spectra[0][3]);
  }
}

TEST_CASE("noise heuristic") {
  PrecisionCtx ctx(64);
  ModeVector v = zeros(40, ctx);
  for (int k = -5; k <= 5; ++k) v[mode_index(k, 40)] = MpComplex(ctx, 1.0);
  CHECK(noise_ratio(v) == 0.0);  // interior median is zero too
  for (int i = 0; i < 40; ++i) v[i] = MpComplex(ctx, 1e-3);
  for (int k = 18; k < 20; ++k) v[mode_index(k, 40)] = v[mode_index(-k, 40)] = MpComplex(ctx, 1.0);
  CHECK(noise_ratio(v) > 1.0);
}

TEST_CASE("preflight tail warning") {
  PrecisionCtx ctx(100);
  WaveProfile f = example_profile(ExampleKind::analytic, ctx, 32);
  CsEngine e(f, 10, 32, false);
  CHECK(e.tail_log10() > -10);
  CHECK_FALSE(e.tail_warning().empty());
  CHECK_THROWS_AS(CsEngine(f, 3, 30 + 1, false), std::invalid_argument);
}
