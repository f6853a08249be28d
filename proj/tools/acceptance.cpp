// Acceptance runner: criteria 1-11 with pinned tolerances, one PASS/FAIL line each.
// Exit status is 0 once every selected criterion has run; --strict makes any FAIL exit 1.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "dno/afm.hpp"
#include "dno/bim.hpp"
#include "dno/cs.hpp"
#include "dno/profiles.hpp"
#include "dno/tfe.hpp"

using namespace dno;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(const MpReal& v) { return v.to_string(3); }
std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

MpReal lit(const PrecisionCtx& ctx, const char* s) { return MpReal::parse(ctx, s); }

std::vector<MpReal> values(const SurfaceField& f) { return f.values(); }

// Least-squares slope of y over x.
double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double n = static_cast<double>(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double log10_of(const MpReal& v) { return v.is_zero() ? -1e300 : log10(abs(v)).to_double(); }

// ---------------------------------------------------------------- 1

Outcome flat_surface() {
  std::ostringstream d;
  bool ok = true;
  for (int bits : {53, 212}) {
    PrecisionCtx ctx(bits);
    const int M = 128, K = 32, N = 16, order = 2;
    MpReal h(ctx, 1), tol = ldexp(MpReal(ctx, 1), 12 - bits);
    WaveProfile flat = WaveProfile::flat(Depth::finite(h), ctx);
    Grid g(M, ctx);
    SurfaceField D = SurfaceField::from_function(g, [](const MpReal& x) { return cos(x); });
    std::vector<MpReal> exact;
    for (const auto& v : D.values()) exact.push_back(v * tanh(h));

    std::vector<std::pair<std::string, std::vector<MpReal>>> got;
    got.emplace_back("CS", cs_neumann(flat, D, order));
    AfmSolver afm(build_system(flat, K, M));
    got.emplace_back("AFM", values(afm.afm_neumann(D, afm.columns())));
    got.emplace_back("AFM*", values(afm.afmstar_neumann(D, afm.columns())));
    got.emplace_back("BIM", values(bim_dno(flat, D)));
    TfeSolver tfe(flat, D, N);
    tfe.run_to(order);
    std::vector<MpReal> sum(static_cast<size_t>(M), MpReal(ctx));
    for (int n = 0; n <= order; ++n) {
      SurfaceField t = tfe.gn(n);
      for (int j = 0; j < M; ++j) sum[static_cast<size_t>(j)] += t.value(j);
    }
    got.emplace_back("TFE", std::move(sum));

    d << bits << " bits (tol " << sci(tol) << "):";
    for (const auto& [name, v] : got) {
      MpReal e = rms_diff(v, exact);
      ok = ok && e <= tol;
      d << ' ' << name << ' ' << sci(e);
    }
    d << "; ";
  }
  return {ok, d.str()};
}

// ---------------------------------------------------------------- 2

Outcome bim_pole_pair() {
  std::ostringstream d;
  bool ok = true;
  for (auto [bits, tol] : {std::pair{53, "1e-12"}, std::pair{212, "1e-28"}}) {
    PrecisionCtx ctx(bits);
    ExactPair p = polepair_exact(MpReal(ctx, 0.5), MpReal(ctx), Depth::infinite());
    Grid g(256, ctx);
    std::vector<MpReal> N = values(bim_dno(p.profile, p.dirichlet_on(g)));
    std::vector<MpReal> exact = values(p.neumann_on(g));
    MpReal e = rms_diff(N, exact), worst(ctx);
    for (size_t j = 0; j < N.size(); ++j) worst = max(worst, abs(N[j] - exact[j]));
    ok = ok && e <= lit(ctx, tol);
    d << bits << " bits: rms " << sci(e) << " (tol " << tol << "), max " << sci(worst) << "; ";
  }
  return {ok, d.str()};
}

// ---------------------------------------------------------------- 3, 10

// The M = K = 256 system at 360 bits is shared by criteria 3 and 10.
const AfmSolver& square_pole_pair_solver() {
  static std::optional<AfmSolver> solver;
  if (!solver) {
    PrecisionCtx ctx(360);
    ExactPair p = polepair_exact(MpReal(ctx, 0.5), MpReal(ctx), Depth::infinite());
    solver.emplace(build_system(p.profile, 256, 256));
  }
  return *solver;
}

Outcome afm_sweep() {
  PrecisionCtx ctx(360);
  ExactPair p = polepair_exact(MpReal(ctx, 0.5), MpReal(ctx), Depth::infinite());
  MpReal tol = lit(ctx, "1e-13");
  std::ostringstream d;

  Grid g384(384, ctx);
  AfmSolver tall(build_system(p.profile, 256, 384));
  CutoffSweep s = tall.sweep(p.dirichlet_on(g384), values(p.neumann_on(g384)));
  MpReal a = s.rms_afm[s.best_afm], b = s.rms_afmstar[s.best_afmstar];
  bool ok = a <= tol && b <= tol;
  d << "K=256 M=384: min AFM " << sci(a) << " at cutoff " << s.best_afm << ", min AFM* " << sci(b) << " at cutoff "
    << s.best_afmstar << " (tol 1e-13); ";

  const AfmSolver& sq = square_pole_pair_solver();
  Grid g256(256, ctx);
  CutoffSweep q = sq.sweep(p.dirichlet_on(g256), values(p.neumann_on(g256)));
  int last = static_cast<int>(q.rms_afm.size()) - 1;
  MpReal lo = q.rms_afm[q.best_afm], end = q.rms_afm[last];
  // Interior minimum, then at least a decade of growth by the full cutoff.
  bool interior = q.best_afm > 0 && q.best_afm < last && end >= lo * 10L;
  ok = ok && interior;
  d << "M=K=256: AFM min " << sci(lo) << " at cutoff " << q.best_afm << ", " << sci(end) << " at full cutoff " << last;
  return {ok, d.str()};
}

Outcome conditioning() {
  const AfmSolver& sq = square_pole_pair_solver();
  const auto& S = sq.svd().S;
  MpReal ratio = S.front() / S.back();
  PrecisionCtx ctx(53);
  ExactPair p = polepair_exact(MpReal(ctx, 0.5), MpReal(ctx), Depth::infinite());
  MpReal cond = bim_condition(assemble_kernels(p.profile, 256));
  bool ok = ratio >= lit(ratio.ctx(), "1e40") && cond <= 10L;
  return {ok, "AFM sigma_max/sigma_min " + sci(ratio) + " (need >= 1e40), BIM cond_2 " + sci(cond) + " (need <= 10)"};
}

// ---------------------------------------------------------------- 4

Outcome cs_convergence() {
  PrecisionCtx ctx(360);
  const int M = 256, n_max = 120, cutoff = 50, by = 95;
  ExactPair p = polepair_exact(MpReal(ctx, 0.5), MpReal(ctx), Depth::infinite());
  Grid g(M, ctx);
  CsEngine engine(p.profile, n_max, M, false);
  std::vector<ModeVector> terms = engine.apply(p.dirichlet_on(g).modes());
  PartialSumErrors e = apply_partial_sum(terms, values(p.neumann_on(g)), cutoff);
  const auto& r = e.rms;
  // Trend: block maxima over ten consecutive orders never increase up to n = 95.
  bool trending = true;
  for (int n = 10; n + 10 <= by + 1; n += 10) {
    MpReal prev(ctx), cur(ctx);
    for (int m = n - 10; m < n; ++m) prev = max(prev, r[m]);
    for (int m = n; m < n + 10; ++m) cur = max(cur, r[m]);
    trending = trending && cur <= prev;
  }
  MpReal lo = r[by], hi = r[by];
  for (int n = by; n <= n_max; ++n) {
    lo = min(lo, r[n]);
    hi = max(hi, r[n]);
  }
  bool reached = r[by] <= lit(ctx, "1e-30");
  bool flat = hi <= lo * 10L;
  std::ostringstream d;
  d << "||E|| at n=0,30,60,95,120: " << sci(r[0]) << ", " << sci(r[30]) << ", " << sci(r[60]) << ", " << sci(r[by])
    << ", " << sci(r[n_max]) << "; trend " << (trending ? "ok" : "broken") << ", <=1e-30 by n=95 "
    << (reached ? "yes" : "no") << ", max/min over 95..120 " << sci(hi / lo) << " (need <= 10)";
  return {trending && reached && flat, d.str()};
}

// ---------------------------------------------------------------- 5

Outcome cs_symmetry() {
  std::ostringstream d;
  bool ok = true;
  for (auto [bits, filter, tol] : {std::tuple{600, false, "1e-85"}, std::tuple{300, true, "1e-35"}}) {
    PrecisionCtx ctx(bits);
    CsEngine engine(example_profile(ExampleKind::bandlimited, ctx), 100, 256, filter);
    CancellationReport rep = cancellation_report(engine, 128, true);
    MpReal worst(ctx);
    int at = 0;
    for (int n = 1; n <= 100; ++n)
      if (rep.r[n] > worst) {
        worst = rep.r[n];
        at = n;
      }
    ok = ok && worst <= lit(ctx, tol);
    d << (filter ? "filtered " : "unfiltered ") << bits << " bits: max r_n " << sci(worst) << " at n=" << at
      << " (tol " << tol << "); ";
  }
  return {ok, d.str()};
}

// ---------------------------------------------------------------- 6

Outcome cs_growth() {
  PrecisionCtx ctx(500);
  const int M = 4096, K = 16, n_max = 50;
  CsEngine engine(example_profile(ExampleKind::smooth, ctx, M / 2), n_max, M, false);
  CancellationReport rep = cancellation_report(engine, K, false);
  std::vector<double> nm, nl, am, al, gm, gl;
  for (int n = 13; n <= 37; ++n) {
    nm.push_back(n);
    am.push_back(log10_of(rep.norm_a[n]));
    gm.push_back(log10_of(rep.norm_g[n]));
  }
  for (int n = 38; n <= n_max; ++n) {
    nl.push_back(n);
    al.push_back(log10_of(rep.norm_a[n]));
    gl.push_back(log10_of(rep.norm_g[n]));
  }
  double sa_mid = slope(nm, am), sa_last = slope(nl, al), sg_mid = slope(nm, gm), sg_last = slope(nl, gl);
  // A_n: the slope of log10‖A_n‖ keeps rising (at least 5% steeper in the last quarter).
  // G_n: no such rise; the last-quarter slope may exceed the middle one by at most 0.1 decade/order.
  bool superlinear = sa_last >= 1.05 * sa_mid && sa_mid > 0;
  bool bounded = sg_last <= std::max(sg_mid, 0.0) + 0.1;
  std::ostringstream d;
  d << "log10||A_n|| slope " << sci(sa_mid) << " (n 13-37) -> " << sci(sa_last) << " (n 38-50); log10||G_n|| slope "
    << sci(sg_mid) << " -> " << sci(sg_last) << "; ||A_50|| " << sci(rep.norm_a[n_max]) << ", ||G_50|| "
    << sci(rep.norm_g[n_max]) << (rep.noise_flagged() ? "; noise flag raised" : "");
  return {superlinear && bounded, d.str()};
}

// ---------------------------------------------------------------- 7, 8

struct RandomCase {
  WaveProfile eta;
  SurfaceField D;
};
RandomCase random_case(const PrecisionCtx& ctx, int M) {
  Depth h = Depth::finite(lit(ctx, "0.05"));
  WaveProfile eta = random_bandlimited(8, lit(ctx, "0.01"), 7, h);
  WaveProfile d = random_bandlimited(8, MpReal(ctx, 1), 8, Depth::infinite());
  Grid g(M, ctx);
  return {eta, SurfaceField::from_values(g, d.samples(g))};
}

Outcome tfe_cs_terms() {
  PrecisionCtx ctx(53), wide(212);
  const int M = 256, N = 16, order = 20;
  RandomCase c = random_case(ctx, M);
  TfeSolver tfe(c.eta, c.D, N);
  tfe.run_to(order);
  // Same inputs, exactly widened, through CS at 212 bits.
  std::map<int, MpComplex> coeffs;
  for (const auto& [k, z] : c.eta.coeffs()) coeffs.emplace(k, MpComplex(MpReal(wide, z.re), MpReal(wide, z.im)));
  WaveProfile eta_w(std::move(coeffs), Depth::finite(MpReal(wide, c.eta.depth().h())), ldexp(pi(wide), 1));
  Grid gw(M, wide);
  std::vector<MpReal> dw;
  for (const auto& v : c.D.values()) dw.emplace_back(wide, v);
  std::vector<ModeVector> cs = CsEngine(eta_w, order, M, false).apply(SurfaceField::from_values(gw, dw).modes());

  MpReal floor = ldexp(rms(std::span<const MpReal>(dw)), 8 - 53);
  bool ok = true;
  double worst_rel = 0;
  int first_floor = -1;
  for (int n = 0; n <= order; ++n) {
    std::vector<MpReal> ref = fft_inverse_real(cs[static_cast<size_t>(n)], gw), got;
    SurfaceField t = tfe.gn(n);
    for (const auto& v : t.values()) got.emplace_back(wide, v);
    MpReal gamma = rms_diff(got, ref), scale = rms(std::span<const MpReal>(ref));
    MpReal bound = max(scale * lit(wide, "1e-12"), floor);
    ok = ok && gamma <= bound;
    worst_rel = std::max(worst_rel, (gamma / scale).to_double());
    if (first_floor < 0 && bound == floor) first_floor = n;
  }
  std::ostringstream d;
  d << "Gamma_n <= max(1e-12 ||G_n^CS D||, 2^(8-bits) ||D||_rms = " << sci(floor) << ") for n <= 20; worst relative "
    << sci(worst_rel) << (first_floor >= 0 ? "; ulp floor governs from n=" + std::to_string(first_floor) : "");
  return {ok, d.str()};
}

Outcome cross_method() {
  PrecisionCtx ctx(53);
  const int M = 512, K = 128, N = 24, order = 30;
  RandomCase c = random_case(ctx, M);
  std::vector<std::pair<std::string, std::vector<MpReal>>> got;
  got.emplace_back("BIM", values(bim_dno(c.eta, c.D)));
  TfeSolver tfe(c.eta, c.D, N);
  tfe.run_to(order);
  std::vector<MpReal> sum(static_cast<size_t>(M), MpReal(ctx));
  for (int n = 0; n <= order; ++n) {
    SurfaceField t = tfe.gn(n);
    for (int j = 0; j < M; ++j) sum[static_cast<size_t>(j)] += t.value(j);
  }
  got.emplace_back("TFE", std::move(sum));
  AfmSolver afm(build_system(c.eta, K, M));
  got.emplace_back("AFM", values(afm.afm_neumann(c.D, afm.columns())));
  got.emplace_back("AFM*", values(afm.afmstar_neumann(c.D, afm.columns())));
  got.emplace_back("CS", cs_neumann(c.eta, c.D, order));
  MpReal tol = lit(ctx, "1e-10"), worst(ctx);
  std::ostringstream d;
  for (size_t a = 0; a < got.size(); ++a)
    for (size_t b = a + 1; b < got.size(); ++b) {
      MpReal e = rms_diff(got[a].second, got[b].second);
      worst = max(worst, e);
      d << got[a].first << '/' << got[b].first << ' ' << sci(e) << ' ';
    }
  d << "(tol 1e-10)";
  return {worst <= tol, d.str()};
}

// ---------------------------------------------------------------- 9

Outcome divergence() {
  PrecisionCtx ctx(128);
  MpReal eps(ctx, 0.5), below = -ldexp(eps, -2);
  Grid g(128, ctx);
  std::vector<MpReal> err, at_pi;
  for (int K : {8, 16, 32, 64}) {
    DivergenceDemo d = divergent_series_demo(eps, K, g);
    MpReal worst(ctx);
    for (int j = 0; j < g.M(); ++j)
      if (d.eta[j] <= below) worst = max(worst, abs(d.dirichlet[j] - d.exact_dirichlet[j]));
    err.push_back(worst);
    at_pi.push_back(abs(d.dirichlet[g.M() / 2]));
  }
  bool ok = true;
  for (size_t i = 1; i < err.size(); ++i) ok = ok && err[i] < err[i - 1] * MpReal(ctx, 0.5) && at_pi[i] > at_pi[i - 1] * 10L;
  std::ostringstream d;
  d << "K=8,16,32,64: max error where eta <= -eps/4";
  for (const auto& e : err) d << ' ' << sci(e);
  d << "; |D_K(pi)|";
  for (const auto& v : at_pi) d << ' ' << sci(v);
  return {ok, d.str()};
}

// ---------------------------------------------------------------- 11

Outcome transform_decay() {
  PrecisionCtx ctx(160);
  const int K = 128, M = 192;
  WaveProfile eta = fab_profile(lit(ctx, "0.3"), MpReal(ctx, 1), M / 2, Depth::finite(MpReal(ctx, 1))).scaled(lit(ctx, "0.05"));
  ExactPair f = pole_field_on(eta, MpReal(ctx, 1));
  AfmSystem sys = build_system(eta, K, M, AfmForm::real_trig);
  Grid g(M, ctx);
  SurfaceField N = f.neumann_on(g);
  AfmTransform t = afm_transform(sys, N);
  MpReal root2 = sqrt(MpReal(ctx, 2));
  int lo = K / 8, hi = K / 4, below = 0;
  for (int k = lo; k < hi; ++k)
    if (abs(t.coeffs[k]) < abs(N.mode(k)) * root2) ++below;
  bool ok = 2 * below > hi - lo && t.rank_warnings.empty();
  std::ostringstream d;
  d << below << " of " << hi - lo << " indices k in [" << lo << ',' << hi << ") have |N~_k|/sqrt2 < |N^_k|; at k=" << hi - 1
    << ": " << sci(abs(t.coeffs[hi - 1]) / root2) << " vs " << sci(abs(N.mode(hi - 1)));
  if (!t.rank_warnings.empty()) d << "; QR rank warnings";
  return {ok, d.str()};
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> all = {
      {1, "flat-surface exactness, all five methods", flat_surface},
      {2, "pole pair, BIM at 53 and 212 bits", bim_pole_pair},
      {3, "AFM/AFM* cutoff sweep at 360 bits", afm_sweep},
      {4, "CS partial sums, mode cutoff 50", cs_convergence},
      {5, "CS self-adjointness defect r_n", cs_symmetry},
      {6, "cancellation signature, C-infinity profile at M=4096", cs_growth},
      {7, "TFE and CS terms agree", tfe_cs_terms},
      {8, "cross-method consistency, shallow random profile", cross_method},
      {9, "divergent series reconstruction", divergence},
      {10, "AFM versus BIM conditioning", conditioning},
      {11, "orthogonalized AFM coefficients decay faster", transform_decay},
  };
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  bool strict = false;
  app.add_option("--only", only, "criteria to run (default: all)")->check(CLI::Range(1, 11));
  app.add_flag("--strict", strict, "exit 1 if any criterion fails");
  CLI11_PARSE(app, argc, argv);

  int run = 0, passed = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ++run;
    passed += o.pass;
    std::printf("criterion %2d: %s  %s [%.1fs]\n    %s\n", c.id, o.pass ? "PASS" : "FAIL", c.title, sec, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", passed, run);
  return strict && passed != run ? 1 : 0;
}
