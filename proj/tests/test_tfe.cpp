#include <stdexcept>

#include "doctest.h"
#include "dno/cs.hpp"
#include "dno/tfe.hpp"
#include "oracles.hpp"

using namespace dno;

namespace {

// Chebyshev coefficients of g(y) on [−h, 0], y = h(s − 1)/2.
ChebCoeffs cheb_of(int N, const MpReal& h, const std::function<MpComplex(const MpReal&)>& g) {
  std::vector<MpComplex> nodal;
  for (const auto& s : cheb_nodes(N, h.ctx())) nodal.push_back(g(ldexp(h * (s - 1L), -1)));
  return cheb_transform(nodal);
}

ChebCoeffs zero_coeffs(int N, const PrecisionCtx& ctx) { return ChebCoeffs{zeros(N + 1, ctx)}; }

SurfaceField trig_data(const Grid& g, std::uint64_t seed) {
  return SurfaceField::from_values(g, random_bandlimited(6, MpReal(g.ctx(), 1), seed, Depth::infinite()).samples(g));
}

}  // namespace

TEST_CASE("boundary value problem: zero forcing and the k = 0 closed form") {
  PrecisionCtx ctx(128);
  const int N = 12;
  MpReal h(ctx, 0.7);
  TfeBvp bvp(N, h);
  bvp.prepare(5);
  ChebCoeffs z = zero_coeffs(N, ctx);
  for (int k : {0, 3, -5}) {
    ChebCoeffs u = bvp.solve(k, z, z, z);
    for (const auto& a : u.alpha) CHECK(a.is_zero());
  }
  ChebCoeffs one = z;
  one.alpha[0] = MpComplex(MpReal(ctx, 1));
  std::vector<MpComplex> u = cheb_inverse(bvp.solve(0, z, z, one));
  std::vector<MpReal> s = cheb_nodes(N, ctx);
  MpReal tol = oracle::ulp_scale(ctx, 12);
  for (int i = 0; i <= N; ++i) {
    MpReal y = ldexp(h * (s[static_cast<size_t>(i)] - 1L), -1);
    CHECK(abs(u[static_cast<size_t>(i)] - MpComplex(ldexp(y * y, -1) + h * y)) < tol);
  }
  CHECK(abs(u.back().re + ldexp(h * h, -1)) < tol);
  CHECK_THROWS_AS(static_cast<void>(bvp.solve(6, z, z, z)), std::out_of_range);
}

TEST_CASE("boundary value problem: manufactured solution through every forcing slot") {
  // û = cos(π(y+h)/(2h)) has û(0) = 0 and û'(−h) = 0.
  PrecisionCtx ctx(128);
  const int N = 40;
  MpReal h(ctx, 0.9), c = pi(ctx) / ldexp(h, 1);
  TfeBvp bvp(N, h);
  bvp.prepare(4);
  auto u = [&](const MpReal& y) { return cos(c * (y + h)); };
  auto du = [&](const MpReal& y) { return -(c * sin(c * (y + h))); };
  for (int k : {0, 1, 4}) {
    // ik F1 + ∂_y F2 + F3 = û'' − k²û with F1 = ik û, F2 = û', F3 = 0.
    ChebCoeffs F1 = cheb_of(N, h, [&](const MpReal& y) { return MpComplex(MpReal(ctx), u(y) * static_cast<long>(k)); });
    ChebCoeffs F2 = cheb_of(N, h, [&](const MpReal& y) { return MpComplex(du(y)); });
    std::vector<MpComplex> got = cheb_inverse(bvp.solve(k, F1, F2, zero_coeffs(N, ctx)));
    // The same û through F3 alone.
    ChebCoeffs F3 = cheb_of(N, h, [&](const MpReal& y) { return MpComplex(-(c * c + static_cast<long>(k * k)) * u(y)); });
    std::vector<MpComplex> got3 = cheb_inverse(bvp.solve(k, zero_coeffs(N, ctx), zero_coeffs(N, ctx), F3));
    std::vector<MpReal> s = cheb_nodes(N, ctx);
    for (int i = 0; i <= N; ++i) {
      MpReal y = ldexp(h * (s[static_cast<size_t>(i)] - 1L), -1);
      CAPTURE(k);
      CHECK(abs(got[static_cast<size_t>(i)] - MpComplex(u(y))) < MpReal(ctx, 1e-30));
      CHECK(abs(got3[static_cast<size_t>(i)] - MpComplex(u(y))) < MpReal(ctx, 1e-30));
    }
  }
}

TEST_CASE("order zero is the flat-surface operator for any profile") {
  PrecisionCtx ctx(106);
  MpReal h(ctx, 0.6);
  WaveProfile f = random_bandlimited(5, MpReal(ctx, 0.1), 3, Depth::finite(h));
  Grid g(32, ctx);
  SurfaceField D = SurfaceField::from_function(g, [](const MpReal& x) { return cos(x); });
  TfeSolver t(f, D, 16);
  MpReal tol = oracle::ulp_scale(ctx, 10);
  const BulkField& u0 = t.field(0);
  std::vector<MpReal> y = t.y_nodes();
  for (int j = 0; j < 32; ++j) {
    CHECK(abs(t.gn(0).value(j) - tanh(h) * D.value(j)) < tol);
    CHECK(abs(u0.uy(16, j)) < tol);  // bottom
    for (int i = 0; i <= 16; i += 4) {
      MpReal c = cosh(y[static_cast<size_t>(i)] + h) / cosh(h), s = sinh(y[static_cast<size_t>(i)] + h) / cosh(h);
      CHECK(abs(u0.ux(i, j) + c * sin(g.x(j))) < tol);
      CHECK(abs(u0.uy(i, j) - s * cos(g.x(j))) < tol);
    }
  }
  SurfaceField C = SurfaceField::from_values(g, std::vector<MpReal>(32, MpReal(ctx, 2.5)));
  TfeSolver tc(f, C, 16);
  for (int i = 0; i <= 16; ++i)
    for (int j = 0; j < 32; ++j) {
      CHECK(abs(tc.field(0).ux(i, j)) < tol);
      CHECK(abs(tc.field(0).uy(i, j)) < tol);
    }
}

TEST_CASE("forcing of order one evaluated by hand") {
  PrecisionCtx ctx(106);
  MpReal h(ctx, 0.8);
  const int M = 16, N = 10;
  WaveProfile f({{1, MpComplex(MpReal(ctx, 0.05))}}, Depth::finite(h), ldexp(pi(ctx), 1));  // 0.1 cos x
  Grid g(M, ctx);
  SurfaceField D = SurfaceField::from_function(g, [](const MpReal& x) { return cos(x); });
  TfeSolver t(f, D, N);
  TfeForcing F = t.forcing(1);
  std::vector<MpReal> y = t.y_nodes();
  MpReal tol = oracle::ulp_scale(ctx, 10);
  for (int i = 0; i <= N; ++i)
    for (int j = 0; j < M; ++j) {
      MpReal x = g.x(j), yi = y[static_cast<size_t>(i)];
      MpReal Y = MpReal(ctx, 1) + yi / h, fx = -(MpReal(ctx, 0.1) * sin(x));
      MpReal uy = sinh(yi + h) / cosh(h) * cos(x), ux = -(cosh(yi + h) / cosh(h) * sin(x));
      CHECK(abs(F.F1(i, j) - Y * fx * uy) < tol);
      CHECK(abs(F.F4(i, j) - fx * ux) < tol);
      CHECK(F.F5(i, j).is_zero());
      CHECK(abs(F.F3(i, j) - (F.F5(i, j) - F.F4(i, j)) / h) < tol);
    }
  CHECK_THROWS_AS(static_cast<void>(t.forcing(3)), std::out_of_range);
}

TEST_CASE("flat surface: no forcing and no higher orders") {
  PrecisionCtx ctx(64);
  MpReal h(ctx, 1);
  Grid g(16, ctx);
  TfeSolver t(WaveProfile::flat(Depth::finite(h), ctx), trig_data(g, 1), 8);
  t.run_to(3);
  for (int n = 1; n <= 3; ++n) {
    TfeForcing F = t.forcing(n);
    for (const BulkGrid* b : {&F.F1, &F.F2, &F.F3, &F.F4, &F.F5})
      for (const auto& v : b->v) CHECK(v.is_zero());
    SurfaceField gn = t.gn(n);
    for (const auto& v : gn.values()) CHECK(v.is_zero());
  }
  TfeNorms nm = t.norms();
  REQUIRE(nm.kappa.size() == 4u);
  for (int n = 1; n <= 3; ++n)
    for (const auto& v : nm.kappa[static_cast<size_t>(n)]) CHECK(v.is_zero());
  CHECK(nm.kappa[0][0] > MpReal(ctx));
}

TEST_CASE("terms agree with the CS recursion at extended precision") {
  PrecisionCtx ctx(106);
  const int M = 64, N = 40, n_max = 6;
  MpReal h(ctx, 0.5);
  WaveProfile f = random_bandlimited(4, MpReal(ctx, 0.1), 11, Depth::finite(h));
  Grid g(M, ctx);
  SurfaceField D = trig_data(g, 12);
  TfeSolver t(f, D, N);
  t.run_to(n_max);
  std::vector<ModeVector> cs = CsEngine(f, n_max, M, false).apply(D.modes());
  for (int n = 0; n <= n_max; ++n) {
    std::vector<MpReal> ref = fft_inverse_real(cs[static_cast<size_t>(n)], g);
    MpReal scale = rms(ref);
    CAPTURE(n);
    CHECK(scale > MpReal(ctx));
    CHECK(rms_diff(t.gn(n).values(), ref) < scale * MpReal(ctx, 1e-24));
  }
}

TEST_CASE("refining N leaves the low Chebyshev norms unchanged") {
  PrecisionCtx ctx(106);
  MpReal h(ctx, 0.5);
  WaveProfile f = random_bandlimited(4, MpReal(ctx, 0.1), 5, Depth::finite(h));
  Grid g(32, ctx);
  SurfaceField D = trig_data(g, 6);
  TfeSolver a(f, D, 24), b(f, D, 48);
  a.run_to(3);
  b.run_to(3);
  TfeNorms na = a.norms(), nb = b.norms();
  for (int n = 0; n <= 3; ++n)
    for (int j = 0; j < 6; ++j) {
      const MpReal& ka = na.kappa[static_cast<size_t>(n)][static_cast<size_t>(j)];
      const MpReal& kb = nb.kappa[static_cast<size_t>(n)][static_cast<size_t>(j)];
      CAPTURE(n);
      CAPTURE(j);
      CHECK(abs(ka - kb) <= max(ka, kb) * MpReal(ctx, 1e-12));
    }
  // The high coefficients are resolved to roundoff.
  for (int n = 0; n <= 3; ++n) CHECK(nb.kappa[static_cast<size_t>(n)].back() < nb.kappa[static_cast<size_t>(n)][0] * MpReal(ctx, 1e-25));
  CHECK(na.gamma[0].size() == 16u);
}

TEST_CASE("serial and parallel runs are bit-identical") {
  PrecisionCtx ctx(64);
  MpReal h(ctx, 0.4);
  WaveProfile f = random_bandlimited(4, MpReal(ctx, 0.05), 21, Depth::finite(h));
  Grid g(32, ctx);
  SurfaceField D = trig_data(g, 22);
  TfeSolver a(f, D, 12, true), b(f, D, 12, false);
  a.run_to(4);
  b.run_to(4);
  for (int n = 0; n <= 4; ++n) {
    for (int j = 0; j < 32; ++j) CHECK(a.gn(n).value(j) == b.gn(n).value(j));
    for (size_t i = 0; i < a.field(n).uy.v.size(); ++i) CHECK(a.field(n).uy.v[i] == b.field(n).uy.v[i]);
  }
}

TEST_CASE("order n scales as ε^n") {
  PrecisionCtx ctx(106);
  MpReal h(ctx, 0.6), eps(ctx, 0.25);
  WaveProfile f = random_bandlimited(3, MpReal(ctx, 0.1), 31, Depth::finite(h));
  Grid g(32, ctx);
  SurfaceField D = trig_data(g, 32);
  TfeSolver a(f, D, 24), b(f.scaled(eps), D, 24);
  a.run_to(4);
  b.run_to(4);
  for (int n = 0; n <= 4; ++n) {
    MpReal en = pow(eps, n);
    std::vector<MpReal> expect;
    SurfaceField ga = a.gn(n);
    for (const auto& v : ga.values()) expect.push_back(v * en);
    CHECK(rms_diff(b.gn(n).values(), expect) <= rms(expect) * oracle::ulp_scale(ctx, 16));
  }
}

TEST_CASE("invalid configurations are rejected") {
  PrecisionCtx ctx(64);
  Grid g(16, ctx);
  SurfaceField D = trig_data(g, 1);
  CHECK_THROWS_AS(TfeSolver(WaveProfile::flat(Depth::infinite(), ctx), D, 8), std::invalid_argument);
  CHECK_THROWS_AS(TfeBvp(1, MpReal(ctx, 1)), std::invalid_argument);
  TfeSolver t(WaveProfile::flat(Depth::finite(MpReal(ctx, 1)), ctx), D, 8);
  CHECK_THROWS_AS(static_cast<void>(t.gn(1)), std::out_of_range);
  CHECK_THROWS_AS(static_cast<void>(t.field(1)), std::out_of_range);
}
