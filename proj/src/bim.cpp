#include "dno/bim.hpp"

#include <stdexcept>

namespace dno {

namespace {

BimKernels assemble(const WaveProfile& profile, int M, bool parallel) {
  if (M < 4) throw std::invalid_argument("BIM needs at least 4 collocation points");
  PrecisionCtx ctx = profile.ctx();
  Grid grid(M, ctx);
  if (!grid.same_as(Grid(M, profile.L()))) throw std::invalid_argument("BIM requires period 2π");
  std::vector<MpReal> eta = profile.samples(grid), eta1 = profile.samples(grid, 1), eta2 = profile.samples(grid, 2);
  std::vector<MpComplex> z, dz;
  for (int j = 0; j < M; ++j) {
    if (!eta[j].is_finite() || !eta1[j].is_finite() || !eta2[j].is_finite())
      throw std::invalid_argument("surface samples are not finite");
    z.emplace_back(grid.x(j), eta[j]);
    dz.emplace_back(MpReal(ctx, 1), eta1[j]);
  }
  // ½cot(π m / M), m = 1..M−1
  std::vector<MpReal> half_cot(static_cast<size_t>(M), MpReal(ctx));
  for (int m = 1; m < M; ++m) {
    MpReal t = pi(ctx) * static_cast<long>(m) / static_cast<long>(M);
    half_cot[static_cast<size_t>(m)] = ldexp(cos(t) / sin(t), -1);
  }
  const Depth& depth = profile.depth();
  BimKernels k{DenseMatrix(M, M, ctx), DenseMatrix(M, M, ctx), profile, grid};

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int i = 0; i < M; ++i) {
    MpComplex c(ctx), w(ctx);
    for (int j = 0; j < M; ++j) {
      MpReal a(ctx), b(ctx);
      if (i == j) {
        // ζ'' = iη''
        MpComplex q = MpComplex(MpReal(ctx), ldexp(eta2[i], -1)) / dz[i];
        a = -q.im;
        b = q.re;
      } else {
        MpComplex d = z[i] - z[j];
        c = cot(MpComplex(ldexp(d.re, -1), ldexp(d.im, -1)));
        const MpReal& hc = half_cot[static_cast<size_t>(((i - j) % M + M) % M)];
        w = dz[j] * c;
        a = ldexp(w.im, -1);
        w = dz[i] * c;
        b = ldexp(w.re, -1) - hc;
      }
      if (!depth.is_infinite()) {
        // Image point conj ζ(β) − 2ih.
        MpComplex u = z[i] - conj(z[j]);
        u.im += ldexp(depth.h(), 1);
        c = cot(MpComplex(ldexp(u.re, -1), ldexp(u.im, -1)));
        w = conj(dz[j]) * c;
        a -= ldexp(w.im, -1);
        w = dz[i] * c;
        b -= ldexp(w.re, -1);
      }
      k.A(i, j) = MpComplex(a);
      k.B(i, j) = MpComplex(b);
    }
  }
  return k;
}

}  // namespace

BimKernels assemble_kernels(const WaveProfile& profile, int M) { return assemble(profile, M, true); }
BimKernels assemble_kernels_serial(const WaveProfile& profile, int M) { return assemble(profile, M, false); }

DenseMatrix bim_system_matrix(const BimKernels& k) {
  const int M = k.grid.M();
  PrecisionCtx ctx = k.grid.ctx();
  DenseMatrix S(M, M, ctx);
  MpReal half(ctx, 0.5);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) {
      S(i, j) = MpComplex(k.A(i, j).re / static_cast<long>(M));
      if (i == j) S(i, j).re += half;
    }
  return S;
}

BimSolution bim_solve(const BimKernels& k, const SurfaceField& dirichlet, BimMethod method) {
  if (!dirichlet.grid().same_as(k.grid)) throw std::invalid_argument("Dirichlet data must live on the BIM grid");
  PrecisionCtx ctx = k.grid.ctx();
  const int M = k.grid.M();
  DenseMatrix S = bim_system_matrix(k);
  std::vector<MpComplex> rhs;
  for (const auto& v : dirichlet.values()) rhs.emplace_back(v);

  BimSolution out{dirichlet, MpReal(ctx), 0, false, {}};
  std::vector<MpComplex> mu;
  if (method == BimMethod::iterative) {
    MpReal tol = ldexp(MpReal(ctx, 1), -(ctx.bits() - 10));
    GmresResult g = gmres([&](std::span<const MpComplex> x) { return matvec(S, x); }, rhs, tol, 30, 10 * M);
    out.iterations = g.iterations;
    if (g.converged) {
      mu = std::move(g.x);
    } else {
      out.fell_back = true;
      out.warning = "GMRES did not converge (relative residual " + g.relative_residual.to_string(4) +
                    "); solved by LU instead";
    }
  }
  MpReal n1 = norm1(S);
  LuFactorization lu(std::move(S));
  out.condition_1 = n1 * lu.inverse_norm1_estimate();
  if (mu.empty()) mu = lu.solve(rhs);
  std::vector<MpReal> v;
  for (const auto& z : mu) v.push_back(z.re);
  out.mu = SurfaceField::from_values(k.grid, std::move(v));
  return out;
}

SurfaceField bim_neumann(const BimKernels& k, const SurfaceField& mu) {
  if (!mu.grid().same_as(k.grid)) throw std::invalid_argument("density must live on the BIM grid");
  const int M = k.grid.M();
  PrecisionCtx ctx = k.grid.ctx();
  ModeVector modes = mu.modes();  // Nyquist already dropped
  apply_multiplier(modes, symbols::ddx(ctx));
  std::vector<MpReal> dmu = fft_inverse_real(modes, k.grid);
  apply_multiplier(modes, symbols::hilbert(ctx));
  std::vector<MpReal> n = fft_inverse_real(modes, k.grid);
  MpReal acc(ctx);
  for (int i = 0; i < M; ++i) {
    acc = MpReal(ctx);
    for (int j = 0; j < M; ++j) acc += k.B(i, j).re * dmu[static_cast<size_t>(j)];
    n[static_cast<size_t>(i)] = ldexp(n[static_cast<size_t>(i)], -1) + acc / static_cast<long>(M);
  }
  return SurfaceField::from_values(k.grid, std::move(n));
}

SurfaceField bim_dno(const WaveProfile& profile, const SurfaceField& dirichlet, BimMethod method) {
  BimKernels k = assemble_kernels(profile, dirichlet.M());
  return bim_neumann(k, bim_solve(k, dirichlet, method).mu);
}

MpReal bim_condition(const BimKernels& k) {
  SvdFactorization f = svd(bim_system_matrix(k));
  return f.S.front() / f.S.back();
}

}  // namespace dno
