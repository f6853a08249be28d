#include "dno/tfe.hpp"

#include <stdexcept>

namespace dno {

namespace {

BulkGrid bulk(int M, int N, const PrecisionCtx& ctx) {
  return BulkGrid{M, N, std::vector<MpReal>(static_cast<size_t>(M) * (N + 1), MpReal(ctx))};
}

// Full conjugate-symmetric spectrum from modes k = 0..M/2−1 (Nyquist zero).
ModeVector hermitian(const std::vector<MpComplex>& half, int M, const PrecisionCtx& ctx) {
  ModeVector m = zeros(M, ctx);
  m[0] = MpComplex(half[0].re);
  for (int k = 1; k < M / 2; ++k) {
    m[static_cast<size_t>(k)] = half[static_cast<size_t>(k)];
    m[static_cast<size_t>(M - k)] = conj(half[static_cast<size_t>(k)]);
  }
  return m;
}

}  // namespace

// ---------------------------------------------------------------- TfeBvp

TfeBvp::TfeBvp(int N, const MpReal& h) : N_(N), h_(h) {
  if (N < 2) throw std::invalid_argument("TFE needs at least 3 Chebyshev nodes");
  PrecisionCtx ctx = h.ctx();
  // I(n) = ∫_{-1}^{1} T_n ds
  std::vector<MpReal> I;
  for (int n = 0; n <= 2 * N + 2; ++n)
    I.push_back(n % 2 ? MpReal(ctx) : MpReal(ctx, 2) / static_cast<long>(1 - n * n));
  auto TT = [&](int a, int b) { return ldexp(I[static_cast<size_t>(a + b)] + I[static_cast<size_t>(std::abs(a - b))], -1); };
  // T_l' = Σ_i D[l][i] T_i
  std::vector<std::vector<MpReal>> D(static_cast<size_t>(N + 1), std::vector<MpReal>(static_cast<size_t>(N + 1), MpReal(ctx)));
  for (int l = 1; l <= N; ++l)
    for (int i = l - 1; i >= 0; i -= 2) D[l][i] = MpReal(ctx, i == 0 ? l : 2 * l);

  P_.assign(static_cast<size_t>(N + 1), std::vector<MpReal>(static_cast<size_t>(N + 1), MpReal(ctx)));
  Q_ = P_;
  for (int j = 0; j <= N; ++j)
    for (int l = 1; l <= N; ++l) {
      P_[j][l] = TT(j, l) - I[static_cast<size_t>(j)];
      for (int i = l - 1; i >= 0; i -= 2) Q_[j][l] += D[l][i] * TT(j, i);
    }
  S_ = P_;
  Mass_ = P_;
  for (int l = 1; l <= N; ++l)
    for (int m = 1; m <= N; ++m) {
      MpReal s(ctx);
      for (int i = l - 1; i >= 0; i -= 2)
        for (int q = m - 1; q >= 0; q -= 2) s += D[l][i] * D[m][q] * TT(i, q);
      S_[l][m] = s;
      Mass_[l][m] = TT(l, m) - I[static_cast<size_t>(l)] - I[static_cast<size_t>(m)] + 2L;
    }
}

void TfeBvp::prepare(int kmax) {
  PrecisionCtx ctx = h_.ctx();
  MpReal a = MpReal(ctx, 2) / h_, b = ldexp(h_, -1);
  for (int k = static_cast<int>(lu_.size()); k <= kmax; ++k) {
    DenseMatrix K(N_, N_, ctx);
    MpReal kk = b * static_cast<long>(k) * static_cast<long>(k);
    for (int l = 1; l <= N_; ++l)
      for (int m = 1; m <= N_; ++m) K(l - 1, m - 1) = MpComplex(a * S_[l][m] + kk * Mass_[l][m]);
    lu_.emplace_back(std::move(K));
  }
}

ChebCoeffs TfeBvp::solve(int k, const ChebCoeffs& F1, const ChebCoeffs& F2, const ChebCoeffs& F3) const {
  const int ak = std::abs(k);
  if (ak >= static_cast<int>(lu_.size())) throw std::out_of_range("TFE wavenumber was not prepared");
  PrecisionCtx ctx = h_.ctx();
  MpReal half_h = ldexp(h_, -1);
  std::vector<MpComplex> rhs = zeros(N_, ctx);
  MpComplex r(ctx);
  for (int j = 0; j <= N_ && j < static_cast<int>(F1.alpha.size()); ++j) {
    // R = ik F1 + F3
    const MpComplex& f1 = F1.alpha[static_cast<size_t>(j)];
    r = MpComplex(F3.alpha[static_cast<size_t>(j)].re - f1.im * static_cast<long>(k),
                  F3.alpha[static_cast<size_t>(j)].im + f1.re * static_cast<long>(k));
    r = r * half_h;
    for (int l = 1; l <= N_; ++l) {
      rhs[static_cast<size_t>(l - 1)] -= r * P_[j][l];
      rhs[static_cast<size_t>(l - 1)] += F2.alpha[static_cast<size_t>(j)] * Q_[j][l];
    }
  }
  std::vector<MpComplex> a = lu_[static_cast<size_t>(ak)].solve(rhs);
  ChebCoeffs out{zeros(N_ + 1, ctx)};
  for (int m = 1; m <= N_; ++m) {
    out.alpha[static_cast<size_t>(m)] = a[static_cast<size_t>(m - 1)];
    out.alpha[0] -= a[static_cast<size_t>(m - 1)];
  }
  return out;
}

// ---------------------------------------------------------------- TfeSolver

TfeSolver::TfeSolver(const WaveProfile& eta, const SurfaceField& dirichlet, int N, bool parallel)
    : M_(dirichlet.M()),
      N_(N),
      parallel_(parallel),
      h_(eta.depth().is_infinite() ? MpReal(eta.ctx()) : eta.depth().h()),
      grid_(dirichlet.grid()),
      bvp_(N, eta.depth().is_infinite() ? MpReal(eta.ctx(), 1) : eta.depth().h()) {
  if (eta.depth().is_infinite()) throw std::invalid_argument("TFE is implemented for finite depth only");
  if (!grid_.is_2pi()) throw std::invalid_argument("TFE requires period 2π");
  if (M_ < 4 || M_ % 2) throw std::invalid_argument("TFE needs an even M >= 4");
  PrecisionCtx ctx = eta.ctx();
  f_ = eta.samples(grid_);
  fx_ = eta.samples(grid_, 1);
  pw_.push_back(std::vector<MpReal>(static_cast<size_t>(M_), MpReal(ctx, 1)));
  bvp_.prepare(M_ / 2 - 1);

  // Order 0: û_0(k, y) = 𝒟̂_k cosh(k(y+h))/cosh(kh), written as
  // e^{ky}(1 + e^{−2k(y+h)})/(1 + e^{−2kh}) so large kh cannot overflow.
  std::vector<MpReal> y = y_nodes();
  std::vector<std::vector<MpComplex>> alpha(static_cast<size_t>(M_ / 2));
#pragma omp parallel for schedule(dynamic) if (parallel_)
  for (int k = 0; k < M_ / 2; ++k) {
    const MpComplex& d = dirichlet.mode(k);
    std::vector<MpComplex> nodal;
    MpReal eb = exp(h_ * static_cast<long>(-2 * k)) + 1L;
    for (int i = 0; i <= N_; ++i) {
      MpReal w = exp(y[static_cast<size_t>(i)] * static_cast<long>(k)) *
                 (exp((y[static_cast<size_t>(i)] + h_) * static_cast<long>(-2 * k)) + 1L) / eb;
      nodal.push_back(d * w);
    }
    alpha[static_cast<size_t>(k)] = cheb_transform(nodal).alpha;
  }
  fields_.push_back(from_modes(0, std::move(alpha)));
  // ∂_y û_0 in closed form, k e^{ky}(1 − e^{−2k(y+h)})/(1 + e^{−2kh}). Chebyshev
  // differentiation here would amplify roundoff by about N²·2/h, which dominates the
  // whole expansion when h is small.
  BulkField& b = fields_.back();
#pragma omp parallel for schedule(dynamic) if (parallel_)
  for (int i = 0; i <= N_; ++i) {
    const MpReal& yi = y[static_cast<size_t>(i)];
    std::vector<MpComplex> half(static_cast<size_t>(M_ / 2), MpComplex(ctx));
    for (int k = 1; k < M_ / 2; ++k) {
      MpReal eb = exp(h_ * static_cast<long>(-2 * k)) + 1L;
      MpReal w = exp(yi * static_cast<long>(k)) * (MpReal(ctx, 1) - exp((yi + h_) * static_cast<long>(-2 * k))) / eb;
      half[static_cast<size_t>(k)] = dirichlet.mode(k) * (w * static_cast<long>(k));
    }
    std::vector<MpReal> v = fft_inverse_real(hermitian(half, M_, ctx), grid_);
    for (int j = 0; j < M_; ++j) b.uy(i, j) = std::move(v[static_cast<size_t>(j)]);
  }
}

std::vector<MpReal> TfeSolver::y_nodes() const {
  std::vector<MpReal> s = cheb_nodes(N_, h_.ctx());
  for (auto& v : s) v = ldexp(h_ * (v - 1L), -1);
  return s;
}

BulkField TfeSolver::from_modes(int order, std::vector<std::vector<MpComplex>> alpha) const {
  PrecisionCtx ctx = h_.ctx();
  const int K = M_ / 2;
  // Row spectra of û and ∂_yû at each node.
  std::vector<std::vector<MpComplex>> uh(static_cast<size_t>(N_ + 1), zeros(K, ctx)), duh = uh;
  MpReal two_over_h = MpReal(ctx, 2) / h_;
#pragma omp parallel for schedule(dynamic) if (parallel_)
  for (int k = 0; k < K; ++k) {
    ChebCoeffs a{alpha[static_cast<size_t>(k)]};
    std::vector<MpComplex> u = cheb_inverse(a), du = cheb_inverse(cheb_differentiate(a));
    for (int i = 0; i <= N_; ++i) {
      uh[static_cast<size_t>(i)][static_cast<size_t>(k)] = u[static_cast<size_t>(i)];
      duh[static_cast<size_t>(i)][static_cast<size_t>(k)] = du[static_cast<size_t>(i)] * two_over_h;
    }
  }
  BulkField out{order, bulk(M_, N_, ctx), bulk(M_, N_, ctx), std::move(alpha)};
#pragma omp parallel for schedule(dynamic) if (parallel_)
  for (int i = 0; i <= N_; ++i) {
    std::vector<MpComplex> ik(static_cast<size_t>(K), MpComplex(ctx));
    for (int k = 0; k < K; ++k) {
      const MpComplex& z = uh[static_cast<size_t>(i)][static_cast<size_t>(k)];
      ik[static_cast<size_t>(k)] = MpComplex(-(z.im * static_cast<long>(k)), z.re * static_cast<long>(k));
    }
    std::vector<MpReal> vx = fft_inverse_real(hermitian(ik, M_, ctx), grid_);
    std::vector<MpReal> vy = fft_inverse_real(hermitian(duh[static_cast<size_t>(i)], M_, ctx), grid_);
    for (int j = 0; j < M_; ++j) {
      out.ux(i, j) = std::move(vx[static_cast<size_t>(j)]);
      out.uy(i, j) = std::move(vy[static_cast<size_t>(j)]);
    }
  }
  return out;
}

TfeForcing TfeSolver::forcing(int n) const {
  if (n < 1 || n > order() + 1) throw std::out_of_range("TFE forcing needs all lower orders");
  PrecisionCtx ctx = h_.ctx();
  TfeForcing F{bulk(M_, N_, ctx), bulk(M_, N_, ctx), bulk(M_, N_, ctx), bulk(M_, N_, ctx), bulk(M_, N_, ctx)};
  std::vector<MpReal> s = cheb_nodes(N_, ctx);
  MpReal inv_h = MpReal(ctx, 1) / h_;
#pragma omp parallel for schedule(static) if (parallel_)
  for (int i = 0; i <= N_; ++i) {
    MpReal Y = ldexp(s[static_cast<size_t>(i)] + 1L, -1);  // 1 + y/h
    MpReal S1(ctx), S2(ctx), S4(ctx), S5(ctx), t(ctx);
    for (int j = 0; j < M_; ++j) {
      S1 = MpReal(ctx);
      S2 = MpReal(ctx);
      S4 = MpReal(ctx);
      S5 = MpReal(ctx);
      for (int m = 0; m <= n - 1; ++m) {
        const BulkField& u = fields_[static_cast<size_t>(n - 1 - m)];
        const MpReal& p = pw_[static_cast<size_t>(m)][static_cast<size_t>(j)];
        t = p * u.uy(i, j);
        S1 += t;
        S2 += t * static_cast<long>(m + 2);
        S4 += p * u.ux(i, j);
      }
      for (int m = 0; m <= n - 2; ++m)
        S5 += pw_[static_cast<size_t>(m)][static_cast<size_t>(j)] * fields_[static_cast<size_t>(n - 2 - m)].uy(i, j) *
              static_cast<long>(m + 1);
      const MpReal& fx = fx_[static_cast<size_t>(j)];
      F.F1(i, j) = Y * fx * S1;
      F.F4(i, j) = fx * S4;
      F.F5(i, j) = Y * fx * fx * S5;
      F.F2(i, j) = Y * (F.F4(i, j) - F.F5(i, j)) + f_[static_cast<size_t>(j)] * inv_h * S2;
      F.F3(i, j) = (F.F5(i, j) - F.F4(i, j)) * inv_h;
    }
  }
  return F;
}

BulkField TfeSolver::solve_order(const TfeForcing& F) const {
  const int K = M_ / 2;
  // Row FFTs: hat[c][i][k] for c = F1, F2, F3.
  std::vector<std::vector<ModeVector>> hat(3, std::vector<ModeVector>(static_cast<size_t>(N_ + 1)));
  const BulkGrid* src[3] = {&F.F1, &F.F2, &F.F3};
#pragma omp parallel for schedule(dynamic) collapse(2) if (parallel_)
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i <= N_; ++i) {
      std::span<const MpReal> row(src[c]->v.data() + static_cast<size_t>(i) * M_, static_cast<size_t>(M_));
      hat[static_cast<size_t>(c)][static_cast<size_t>(i)] = fft_forward(row, grid_);
    }
  std::vector<std::vector<MpComplex>> alpha(static_cast<size_t>(K));
#pragma omp parallel for schedule(dynamic) if (parallel_)
  for (int k = 0; k < K; ++k) {
    ChebCoeffs cf[3];
    for (int c = 0; c < 3; ++c) {
      std::vector<MpComplex> nodal;
      for (int i = 0; i <= N_; ++i) nodal.push_back(hat[static_cast<size_t>(c)][static_cast<size_t>(i)][static_cast<size_t>(k)]);
      cf[c] = cheb_transform(nodal);
    }
    alpha[static_cast<size_t>(k)] = bvp_.solve(k, cf[0], cf[1], cf[2]).alpha;
  }
  return from_modes(static_cast<int>(fields_.size()), std::move(alpha));
}

void TfeSolver::run_to(int n) {
  while (static_cast<int>(pw_.size()) <= n) {
    std::vector<MpReal> next;
    for (int j = 0; j < M_; ++j) next.push_back(-(pw_.back()[static_cast<size_t>(j)] * f_[static_cast<size_t>(j)]) / h_);
    pw_.push_back(std::move(next));
  }
  while (order() < n) fields_.push_back(solve_order(forcing(order() + 1)));
}

SurfaceField TfeSolver::gn(int n) const {
  if (n < 0 || n > order()) throw std::out_of_range("TFE order not computed");
  PrecisionCtx ctx = h_.ctx();
  std::vector<MpReal> g(static_cast<size_t>(M_), MpReal(ctx));
  for (int j = 0; j < M_; ++j) {
    MpReal& v = g[static_cast<size_t>(j)];
    const MpReal& fx = fx_[static_cast<size_t>(j)];
    if (n >= 1) v -= fx * fields_[static_cast<size_t>(n - 1)].ux(0, j);
    for (int m = 0; m <= n; ++m) v += pw_[static_cast<size_t>(m)][static_cast<size_t>(j)] * fields_[static_cast<size_t>(n - m)].uy(0, j);
    MpReal t(ctx);
    for (int m = 0; m <= n - 2; ++m) t += pw_[static_cast<size_t>(m)][static_cast<size_t>(j)] * fields_[static_cast<size_t>(n - 2 - m)].uy(0, j);
    v += fx * fx * t;
  }
  return SurfaceField::from_values(grid_, std::move(g));
}

TfeNorms TfeSolver::norms() const {
  PrecisionCtx ctx = h_.ctx();
  TfeNorms out;
  const int K = M_ / 2;
  for (const auto& f : fields_) {
    std::vector<MpReal> kap(static_cast<size_t>(N_ + 1), MpReal(ctx)), gam(static_cast<size_t>(K), MpReal(ctx));
    for (int k = 0; k < K; ++k)
      for (int j = 0; j <= N_; ++j) {
        MpReal a = norm(f.alpha[static_cast<size_t>(k)][static_cast<size_t>(j)]);
        gam[static_cast<size_t>(k)] += a;
        kap[static_cast<size_t>(j)] += k == 0 ? a : ldexp(a, 1);
      }
    for (auto& v : kap) v = sqrt(v);
    for (auto& v : gam) v = sqrt(v);
    out.kappa.push_back(std::move(kap));
    out.gamma.push_back(std::move(gam));
  }
  return out;
}

}  // namespace dno
