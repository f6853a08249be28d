#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "dno/afm.hpp"
#include "oracles.hpp"

using namespace dno;

namespace {

SurfaceField cos_field(const Grid& g) {
  return SurfaceField::from_function(g, [](const MpReal& x) { return cos(x); });
}

MpReal max_rel_gram_defect(const DenseMatrix& A, const MpReal& diag) {
  PrecisionCtx ctx = A.ctx();
  MpReal worst(ctx);
  for (int a = 0; a < A.cols(); ++a)
    for (int b = 0; b < A.cols(); ++b) {
      MpComplex s(ctx);
      for (int j = 0; j < A.rows(); ++j) s += conj(A(j, a)) * A(j, b);
      if (a == b) s.re -= diag;
      worst = max(worst, abs(s));
    }
  return worst / diag;
}

}  // namespace

TEST_CASE("flat surface: orthogonal columns and the G_0 multiplier at both depths") {
  PrecisionCtx ctx(128);
  const int K = 16, M = 24;
  MpReal tol = oracle::ulp_scale(ctx, 12);

  AfmSystem inf = build_system(WaveProfile::flat(Depth::infinite(), ctx), K, M);
  CHECK(inf.form == AfmForm::complex_exp);
  CHECK(max_rel_gram_defect(inf.A, MpReal(ctx, 1) / static_cast<long>(M)) < tol);
  SurfaceField D = cos_field(inf.grid);
  AfmSolver s(inf);
  CHECK(rms_diff(s.afm_neumann(D, K - 1).values(), D.values()) < tol);
  CHECK(rms_diff(s.afmstar_neumann(D, K - 1).values(), D.values()) < tol);
  CHECK(rms_diff(afm_qr_neumann(inf, D, false).values(), D.values()) < tol);
  CHECK(rms_diff(afm_qr_neumann(inf, D, true).values(), D.values()) < tol);

  MpReal h(ctx, 1);
  AfmSystem fin = build_system(WaveProfile::flat(Depth::finite(h), ctx), K, M);
  CHECK(fin.form == AfmForm::real_trig);
  CHECK(max_rel_gram_defect(fin.A, MpReal(ctx, 1) / static_cast<long>(M)) < tol);
  std::vector<MpReal> expect;
  for (const auto& v : D.values()) expect.push_back(tanh(h) * v);
  AfmSolver sf(fin);
  CHECK(rms_diff(sf.afm_neumann(D, K - 1).values(), expect) < tol);
  CHECK(rms_diff(sf.afmstar_neumann(D, K - 1).values(), expect) < tol);

  // The complex form at finite depth carries the same operator.
  AfmSolver sc(build_system(WaveProfile::flat(Depth::finite(h), ctx), K, M, AfmForm::complex_exp));
  CHECK(rms_diff(sc.afm_neumann(D, K - 1).values(), expect) < tol);
}

TEST_CASE("column norms obey the exponential bound") {
  PrecisionCtx ctx(106);
  const int K = 32, M = 48;
  ExactPair p = polepair_exact(MpReal(ctx, 0.5), MpReal(ctx), Depth::infinite());
  AfmSystem sys = build_system(p.profile, K, M);
  std::vector<MpReal> eta = p.profile.samples(sys.grid);
  MpReal slack = MpReal(ctx, 1) + oracle::ulp_scale(ctx, 8);
  for (int c = 0; c < K - 1; ++c) {
    int k = std::abs(sys.wavenumber[static_cast<size_t>(c)]);
    MpReal norm2(ctx), peak(ctx);
    for (int j = 0; j < M; ++j) {
      norm2 += sys.A(j, c).re * sys.A(j, c).re + sys.A(j, c).im * sys.A(j, c).im;
      peak = max(peak, exp((eta[static_cast<size_t>(j)] - sys.eta_max) * static_cast<long>(k)));
    }
    MpReal norm = sqrt(norm2);
    CHECK(norm <= peak / sqrt(MpReal(ctx, M)) * slack);
    CHECK(norm * slack >= peak / static_cast<long>(M));
    CHECK(peak <= MpReal(ctx, 1));
  }
}

TEST_CASE("cutoff 0 reproduces the norm of the Neumann data") {
  PrecisionCtx ctx(106);
  ExactPair p = polepair_exact(MpReal(ctx, 0.5), MpReal(ctx, -1), Depth::infinite());
  AfmSystem sys = build_system(p.profile, 16, 24);
  SurfaceField D = p.dirichlet_on(sys.grid), N = p.neumann_on(sys.grid);
  CutoffSweep sw = AfmSolver(sys).sweep(D, N.values());
  REQUIRE(sw.rms_afm.size() == 16u);
  CHECK(sw.rms_afm[0] == rms(N.values()));
  CHECK(sw.rms_afmstar[0] == rms(N.values()));
  CHECK(sw.error_afm.size() == 24u);
}

TEST_CASE("sweep agrees with direct solves at every cutoff") {
  PrecisionCtx ctx(106);
  ExactPair p = polepair_exact(MpReal(ctx, 0.5), MpReal(ctx, -1), Depth::infinite());
  AfmSystem sys = build_system(p.profile, 16, 24);
  SurfaceField D = p.dirichlet_on(sys.grid), N = p.neumann_on(sys.grid);
  AfmSolver s(sys);
  CutoffSweep sw = s.sweep(D, N.values());
  MpReal tol = oracle::ulp_scale(ctx, 24);
  for (int c : {1, 5, 11, 15}) {
    CHECK(abs(sw.rms_afm[c] - rms_diff(s.afm_neumann(D, c).values(), N.values())) < tol);
    CHECK(abs(sw.rms_afmstar[c] - rms_diff(s.afmstar_neumann(D, c).values(), N.values())) < tol);
  }
  for (size_t c = 0; c < sw.rms_afm.size(); ++c) {
    CHECK(sw.rms_afm[static_cast<size_t>(sw.best_afm)] <= sw.rms_afm[c]);
    CHECK(sw.rms_afmstar[static_cast<size_t>(sw.best_afmstar)] <= sw.rms_afmstar[c]);
  }
  CHECK_THROWS_AS(static_cast<void>(s.sweep(D, std::vector<MpReal>(3, MpReal(ctx)))), std::invalid_argument);
}

TEST_CASE("uniform and per-column weights cancel") {
  PrecisionCtx ctx(106);
  const int K = 16, M = 24;
  ExactPair p = polepair_exact(MpReal(ctx, 0.5), MpReal(ctx, -1), Depth::infinite());
  AfmSystem sys = build_system(p.profile, K, M);
  SurfaceField D = p.dirichlet_on(sys.grid);
  AfmSolver base(sys);

  AfmSystem scaled = sys;
  MpReal c(ctx, 3.5);
  for (int j = 0; j < M; ++j)
    for (int k = 0; k < K - 1; ++k) {
      scaled.A(j, k) *= c;
      scaled.B(j, k) *= c;
    }
  AfmSolver sc(scaled);
  MpReal tol = oracle::ulp_scale(ctx, 24);
  for (int cut : {4, 9, K - 1}) {
    CHECK(rms_diff(base.afm_neumann(D, cut).values(), sc.afm_neumann(D, cut).values()) < tol);
    CHECK(rms_diff(base.afmstar_neumann(D, cut).values(), sc.afmstar_neumann(D, cut).values()) < tol);
  }

  // Column weights are invisible to the unregularized (QR) solve.
  AfmSystem weighted = sys;
  for (int k = 0; k < K - 1; ++k) {
    MpReal w = exp(MpReal(ctx, 0.3) * static_cast<long>(k % 5));
    for (int j = 0; j < M; ++j) {
      weighted.A(j, k) *= w;
      weighted.B(j, k) *= w;
    }
  }
  MpReal tol_qr = oracle::ulp_scale(ctx, 40);
  for (bool star : {false, true})
    CHECK(rms_diff(afm_qr_neumann(sys, D, star).values(), afm_qr_neumann(weighted, D, star).values()) < tol_qr);
}

TEST_CASE("pole pair: convergence in K, adjoint consistency, QR variant") {
  PrecisionCtx ctx(106);
  ExactPair p = polepair_exact(MpReal(ctx, 0.5), MpReal(ctx, -1), Depth::infinite());
  MpReal prev_afm(ctx, 1e30), prev_star(ctx, 1e30);
  for (int K : {16, 32, 64}) {
    AfmSystem sys = build_system(p.profile, K, 3 * K / 2);
    SurfaceField D = p.dirichlet_on(sys.grid), N = p.neumann_on(sys.grid);
    AfmSolver s(sys);
    SurfaceField a = s.afm_neumann(D, K - 1), b = s.afmstar_neumann(D, K - 1);
    MpReal ea = rms_diff(a.values(), N.values()), eb = rms_diff(b.values(), N.values());
    CAPTURE(K);
    CHECK(ea < prev_afm * MpReal(ctx, 1e-2));
    CHECK(eb < prev_star * MpReal(ctx, 1e-2));
    CHECK(rms_diff(a.values(), b.values()) <= max(ea, eb) * 10L);
    // With full cutoff the SVD and QR routes solve the same system.
    MpReal qtol = max(ea, eb) * MpReal(ctx, 1e-6);
    CHECK(rms_diff(afm_qr_neumann(sys, D, false).values(), a.values()) < qtol);
    CHECK(rms_diff(afm_qr_neumann(sys, D, true).values(), b.values()) < qtol);
    prev_afm = ea;
    prev_star = eb;
  }
  // The pole sits at distance 1 from the surface; AFM* is the more accurate of the two here.
  CHECK(prev_afm < MpReal(ctx, 1e-9));
  CHECK(prev_star < MpReal(ctx, 1e-12));
}

TEST_CASE("finite depth real form against the image pole pair") {
  PrecisionCtx ctx(106);
  ExactPair p = polepair_exact(MpReal(ctx, 0.5), MpReal(ctx, -0.3), Depth::finite(MpReal(ctx, 1.5)));
  MpReal prev(ctx, 1);
  for (int K : {32, 64}) {
    AfmSystem sys = build_system(p.profile, K, 3 * K / 2);
    SurfaceField D = p.dirichlet_on(sys.grid), N = p.neumann_on(sys.grid);
    CutoffSweep sw = AfmSolver(sys).sweep(D, N.values());
    CAPTURE(K);
    CHECK(sw.rms_afm[sw.best_afm] < prev * MpReal(ctx, 1e-2));
    CHECK(sw.rms_afmstar[sw.best_afmstar] < MpReal(ctx, 1e-2));
    prev = sw.rms_afm[sw.best_afm];
  }
  CHECK(prev < MpReal(ctx, 1e-5));
}

TEST_CASE("global relation residual decays spectrally in M") {
  PrecisionCtx ctx(106);
  ExactPair p = polepair_exact(MpReal(ctx, 0.5), MpReal(ctx), Depth::infinite());
  std::vector<double> res;
  for (int M : {32, 64, 128}) {
    AfmSystem sys = build_system(p.profile, 16, M);
    std::vector<MpComplex> r =
        global_relation_residual(sys, p.dirichlet_on(sys.grid), p.neumann_on(sys.grid).values());
    REQUIRE(r.size() == 15u);
    MpReal worst(ctx);
    for (const auto& z : r) worst = max(worst, abs(z));
    res.push_back(worst.to_double());
  }
  CAPTURE(res[0]);
  CAPTURE(res[1]);
  CAPTURE(res[2]);
  // Doubling M squares the error, as for a trapezoid rule on analytic data.
  CHECK(res[1] < res[0] * res[0] * 1e3);
  CHECK(res[2] < res[1] * res[1] * 1e3);
  CHECK(res[2] < 1e-28);
}

TEST_CASE("singular values decay more slowly with more collocation points") {
  PrecisionCtx ctx(106);
  const int K = 32;
  ExactPair p = polepair_exact(MpReal(ctx, 0.5), MpReal(ctx), Depth::infinite());
  auto spectrum = [&](int M) {
    AfmSolver s(build_system(p.profile, K, M));
    std::vector<double> out;
    for (const auto& v : s.svd().S) out.push_back((v / s.svd().S.front()).to_double());
    return out;
  };
  std::vector<double> a = spectrum(32), b = spectrum(48);
  CHECK(a.back() < 1e-3);
  // Normalized tail: M = 48 lies on or above M = 32.
  int above = 0;
  for (int i = K / 2; i < K - 1; ++i) above += b[static_cast<size_t>(i)] >= a[static_cast<size_t>(i)] * (1 - 1e-12);
  CHECK(above == K - 1 - K / 2);
}

TEST_CASE("AFM transform: Fourier on a flat surface, rank warnings pass through") {
  PrecisionCtx ctx(106);
  const int K = 16, M = 24;
  oracle::Rng rng(7);
  std::map<int, MpComplex> modes;
  ModeVector full(static_cast<size_t>(M), MpComplex(ctx));
  full[0] = MpComplex(rng.real(ctx));
  for (int k = 1; k < K / 2; ++k) {
    MpComplex z = rng.complex(ctx);
    full[static_cast<size_t>(k)] = z;
    full[static_cast<size_t>(M - k)] = conj(z);
  }
  for (const Depth& d : {Depth::infinite(), Depth::finite(MpReal(ctx, 0.8))}) {
    AfmSystem sys = build_system(WaveProfile::flat(d, ctx), K, M, AfmForm::real_trig);
    SurfaceField f = SurfaceField::from_modes(sys.grid, full);
    AfmTransform t = afm_transform(sys, f);
    REQUIRE(t.coeffs.size() == static_cast<size_t>(K / 2));
    CHECK(t.rank_warnings.empty());
    MpReal tol = oracle::ulp_scale(ctx, 12), root2 = sqrt(MpReal(ctx, 2));
    CHECK(abs(t.coeffs[0] - f.mode(0)) < tol);
    for (int k = 1; k < K / 2; ++k) CHECK(abs(t.coeffs[static_cast<size_t>(k)] - conj(f.mode(k)) * root2) < tol);
  }
  AfmSystem cplx = build_system(WaveProfile::flat(Depth::infinite(), ctx), K, M);
  CHECK_THROWS_AS(static_cast<void>(afm_transform(cplx, cos_field(cplx.grid))), std::invalid_argument);
}

TEST_CASE("AFM transform decays faster than Fourier on smooth finite-depth data") {
  // A profile with a nearby complex singularity (f̂_k = e^{−0.3|k|}) carrying a field whose own
  // singularity is far above the crest: the Fourier modes inherit the profile's slow decay.
  PrecisionCtx ctx(160);
  const int K = 64, M = 96;
  WaveProfile eta =
      fab_profile(MpReal(ctx, 0.3), MpReal(ctx, 1), M / 2, Depth::finite(MpReal(ctx, 1))).scaled(MpReal(ctx, 0.05));
  ExactPair p = pole_field_on(eta, MpReal(ctx, 1));
  AfmSystem sys = build_system(eta, K, M);
  for (const SurfaceField& f : {p.dirichlet_on(sys.grid), p.neumann_on(sys.grid)}) {
    AfmTransform t = afm_transform(sys, f);
    int faster = 0;
    for (int k = K / 8; k < K / 4; ++k) faster += abs(t.coeffs[static_cast<size_t>(k)]) < abs(f.mode(k)) * sqrt(MpReal(ctx, 2));
    CHECK(faster == K / 8);
  }
}

TEST_CASE("argument validation") {
  PrecisionCtx ctx(64);
  WaveProfile flat = WaveProfile::flat(Depth::infinite(), ctx);
  CHECK_THROWS_AS(static_cast<void>(build_system(flat, 15, 32)), std::invalid_argument);
  CHECK_THROWS_AS(static_cast<void>(build_system(flat, 32, 16)), std::invalid_argument);
  CHECK_THROWS_AS(static_cast<void>(build_system(flat, 2, 16)), std::invalid_argument);
  AfmSystem sys = build_system(flat, 8, 16);
  AfmSolver s(sys);
  SurfaceField other = cos_field(Grid(32, ctx));
  CHECK_THROWS_AS(static_cast<void>(s.afm_neumann(other, 7)), std::invalid_argument);
  CHECK_THROWS_AS(static_cast<void>(s.afmstar_neumann(other, 7)), std::invalid_argument);
  SurfaceField D = cos_field(sys.grid);
  CHECK_THROWS_AS(static_cast<void>(s.afm_neumann(D, 8)), std::invalid_argument);
  CHECK_THROWS_AS(static_cast<void>(s.afmstar_neumann(D, -1)), std::invalid_argument);
}
