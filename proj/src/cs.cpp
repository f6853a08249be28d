#include "dno/cs.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dno {

namespace {

size_t slot(int k, int M) { return static_cast<size_t>(mode_index(k, M)); }

bool outer_row(int k, int M) { return 20 * std::abs(k) >= 9 * M; }

// Column batch size for streamed reductions: enough to keep every thread busy.
int batch_size() { return std::max(2, 2 * omp_get_max_threads()); }

}  // namespace

// ---------------------------------------------------------------- OperatorMatrix

OperatorMatrix::OperatorMatrix(int order, int M, int ncols, const PrecisionCtx& ctx)
    : order_(order), M_(M), ncols_(ncols) {
  cols_.reserve(static_cast<size_t>(ncols));
  for (int j = 0; j < ncols; ++j) cols_.push_back(zeros(M, ctx));
}

MpComplex OperatorMatrix::entry(int k, int j) const {
  if (2 * std::abs(k) >= M_ || std::abs(j) >= ncols_) throw std::out_of_range("operator entry outside computed range");
  if (j >= 0) return cols_[static_cast<size_t>(j)][slot(k, M_)];
  return conj(cols_[static_cast<size_t>(-j)][slot(-k, M_)]);
}

ModeVector OperatorMatrix::apply(const ModeVector& v) const {
  if (static_cast<int>(v.size()) != M_) throw std::invalid_argument("mode vector does not match operator grid");
  PrecisionCtx ctx = v[0].ctx();
  ModeVector out = zeros(M_, ctx);
  MpReal tmp(ctx);
  MpComplex c(ctx);
  for (int j = 0; j < ncols_; ++j) {
    const ModeVector& col = cols_[static_cast<size_t>(j)];
    const MpComplex& vp = v[slot(j, M_)];
    const MpComplex& vm = v[slot(-j, M_)];
    for (int i = 0; i < M_; ++i) {
      int k = wavenumber(i, M_);
      if (2 * k == M_) continue;
      mp::add_mul(out[static_cast<size_t>(i)], col[static_cast<size_t>(i)], vp, tmp);
      if (j > 0) {
        c = conj(col[slot(-k, M_)]);
        mp::add_mul(out[static_cast<size_t>(i)], c, vm, tmp);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------- zero pattern

bool ZeroPattern::zero(int n, int k, int j) const {
  if (n == 0) return k != j;
  if (k == 0 || j == 0) return true;
  if (std::abs(k - j) > n * band) return true;
  if (parity && ((k - j - n) % 2 != 0)) return true;
  if (single_harmonic && std::abs(k) + std::abs(j) > n) return true;
  return false;
}

// ---------------------------------------------------------------- engine

CsEngine::CsEngine(const WaveProfile& f, int n_max, int M, bool filter)
    : n_max_(n_max), M_(M), bits_(f.ctx().bits()), filter_(filter), depth_(f.depth()) {
  if (n_max < 0) throw std::invalid_argument("order must be nonnegative");
  if (M < 8 || M % 2) throw std::invalid_argument("grid size must be even and at least 8");
  PrecisionCtx ctx(bits_);
  Grid grid(M, f.L());
  if (!grid.is_2pi()) throw std::invalid_argument("the expansion is implemented for period 2π only");

  pattern_.band = f.kmax();
  bool odd_only = !f.coeffs().empty();
  for (const auto& [k, z] : f.coeffs())
    if (!z.is_zero() && k % 2 == 0) odd_only = false;
  pattern_.parity = odd_only;
  pattern_.single_harmonic = odd_only && f.kmax() == 1 && depth_.is_infinite();

  const int half = M / 2;
  fpow_.resize(static_cast<size_t>(n_max + 1));
  fpow_[0] = real_zeros(M, ctx);
  for (auto& v : fpow_[0]) v = 1L;
  if (n_max >= 1) fpow_[1] = f.samples(grid);
  for (int m = 2; m <= n_max; ++m) {
    fpow_[static_cast<size_t>(m)] = fpow_[static_cast<size_t>(m - 1)];
    for (int i = 0; i < M; ++i) fpow_[static_cast<size_t>(m)][static_cast<size_t>(i)] *= fpow_[1][static_cast<size_t>(i)];
  }
  fpow_modes_.resize(static_cast<size_t>(n_max + 1));
  {
    Fourier fourier(M, ctx);
    for (int m = 0; m <= n_max; ++m) {
      fpow_modes_[static_cast<size_t>(m)] = zeros(M, ctx);
      fourier.forward(std::span<const MpReal>(fpow_[static_cast<size_t>(m)]), fpow_modes_[static_cast<size_t>(m)]);
      mp::set_zero(fpow_modes_[static_cast<size_t>(m)][static_cast<size_t>(half)]);
    }
  }

  t_ = real_zeros(half + 1, ctx);
  for (int k = 1; k <= half; ++k)
    t_[static_cast<size_t>(k)] = depth_.is_infinite() ? MpReal(ctx, 1) : tanh(MpReal(ctx, depth_.h()) * static_cast<long>(k));
  kpow_.assign(static_cast<size_t>(n_max + 1), real_zeros(half + 1, ctx));
  for (int k = 0; k <= half; ++k) kpow_[0][static_cast<size_t>(k)] = 1L;
  for (int n = 1; n <= n_max; ++n)
    for (int k = 0; k <= half; ++k) {
      MpReal& d = kpow_[static_cast<size_t>(n)][static_cast<size_t>(k)];
      d = kpow_[static_cast<size_t>(n - 1)][static_cast<size_t>(k)] * static_cast<long>(k);
      d /= static_cast<long>(n);
    }
  y_ = kpow_;
  for (int m = 1; m <= n_max; m += 2)
    for (int k = 0; k <= half; ++k) y_[static_cast<size_t>(m)][static_cast<size_t>(k)] *= t_[static_cast<size_t>(k)];

  // Preflight: how much of (f^n_max)^ sits near the Nyquist index.
  const ModeVector& top = fpow_modes_[static_cast<size_t>(n_max)];
  MpReal peak(ctx), tail(ctx);
  for (int i = 0; i < M; ++i) {
    MpReal a = abs(top[static_cast<size_t>(i)]);
    peak = max(peak, a);
    if (outer_row(wavenumber(i, M), M)) tail = max(tail, a);
  }
  if (tail.is_zero() || peak.is_zero()) {
    tail_log10_ = -std::numeric_limits<double>::infinity();
  } else {
    tail_log10_ = log10_abs(tail) - log10_abs(peak);
    if (tail_log10_ > -0.5 * bits_ * std::log10(2.0))
      tail_warning_ = "(f^" + std::to_string(n_max) + ")^ tail/peak near |k| = M/2 is 10^" +
                      std::to_string(tail_log10_) + "; increase M";
  }
}

MpComplex CsEngine::a_entry(int n, int k, int j) const {
  PrecisionCtx ctx(bits_);
  const int half = M_ / 2;
  if (n < 1 || k == 0 || j == 0 || std::abs(k) >= half || std::abs(j) >= half || std::abs(k - j) >= half)
    return MpComplex(ctx);
  MpReal tk = t_[static_cast<size_t>(std::abs(k))], tj = t_[static_cast<size_t>(std::abs(j))];
  if (k < 0) tk = -tk;
  if (j < 0) tj = -tj;
  MpReal a = n % 2 == 0 ? tk - tj : MpReal(ctx, 1) - tk * tj;
  if (a.is_zero()) return MpComplex(ctx);
  MpReal c = kpow_[static_cast<size_t>(n)][static_cast<size_t>(std::abs(k))] * static_cast<long>(j) * a;
  if (k < 0 && n % 2) c = -c;
  return fpow_modes_[static_cast<size_t>(n)][slot(k - j, M_)] * c;
}

void CsEngine::recurse(std::vector<ModeVector>& g, const std::vector<ModeVector>& a, int j, Fourier& fourier) const {
  PrecisionCtx ctx(bits_);
  const int M = M_, half = M_ / 2;
  std::vector<std::vector<MpComplex>> real(static_cast<size_t>(n_max_ + 1));
  std::vector<MpComplex> prod = zeros(M, ctx), modes = zeros(M, ctx);
  for (int n = 1; n <= n_max_; ++n) {
    ModeVector& gn = g[static_cast<size_t>(n)];
    gn = a[static_cast<size_t>(n)];
    for (int s = 1; s < n; ++s) {
      const int m = n - s;
      const auto& fm = fpow_[static_cast<size_t>(m)];
      const auto& rs = real[static_cast<size_t>(s)];
      for (int i = 0; i < M; ++i) mp::mul(prod[static_cast<size_t>(i)], rs[static_cast<size_t>(i)], fm[static_cast<size_t>(i)]);
      fourier.forward(prod, modes);
      const auto& ym = y_[static_cast<size_t>(m)];
      for (int i = 0; i < M; ++i) {
        int k = wavenumber(i, M);
        if (k == half || k == 0) continue;
        mp::sub_mul(gn[static_cast<size_t>(i)], modes[static_cast<size_t>(i)], ym[static_cast<size_t>(std::abs(k))]);
      }
    }
    mp::set_zero(gn[static_cast<size_t>(half)]);
    if (filter_ && j >= 0)
      for (int i = 0; i < M; ++i)
        if (pattern_.zero(n, wavenumber(i, M), j)) mp::set_zero(gn[static_cast<size_t>(i)]);
    if (n < n_max_) {
      real[static_cast<size_t>(n)] = zeros(M, ctx);
      fourier.inverse(gn, real[static_cast<size_t>(n)]);
    }
  }
}

CsEngine::Column CsEngine::column(int j) const {
  PrecisionCtx ctx(bits_);
  const int M = M_;
  if (j < 0 || 2 * j >= M) throw std::out_of_range("column index outside 0 <= j < M/2");
  Column c;
  c.j = j;
  c.a.assign(static_cast<size_t>(n_max_ + 1), zeros(M, ctx));
  c.g.assign(static_cast<size_t>(n_max_ + 1), zeros(M, ctx));
  c.g[0][static_cast<size_t>(j)] = MpComplex(t_[static_cast<size_t>(j)] * static_cast<long>(j));
  if (j == 0) return c;  // G_n 1 = 0 for every n
  for (int n = 1; n <= n_max_; ++n)
    for (int i = 0; i < M; ++i) {
      int k = wavenumber(i, M);
      if (2 * k == M || (filter_ && pattern_.zero(n, k, j))) continue;
      c.a[static_cast<size_t>(n)][static_cast<size_t>(i)] = a_entry(n, k, j);
    }
  Fourier fourier(M, ctx);
  recurse(c.g, c.a, j, fourier);
  return c;
}

std::vector<ModeVector> CsEngine::apply(const ModeVector& v) const {
  PrecisionCtx ctx(bits_);
  const int M = M_, half = M_ / 2;
  if (static_cast<int>(v.size()) != M) throw std::invalid_argument("mode vector does not match engine grid");
  std::vector<ModeVector> a(static_cast<size_t>(n_max_ + 1), zeros(M, ctx));
  std::vector<ModeVector> g(static_cast<size_t>(n_max_ + 1), zeros(M, ctx));
  for (int i = 0; i < M; ++i) {
    int k = wavenumber(i, M);
    if (k == half) continue;
    g[0][static_cast<size_t>(i)] = v[static_cast<size_t>(i)] * (t_[static_cast<size_t>(std::abs(k))] * static_cast<long>(std::abs(k)));
  }
  // A_n v row by row; rows are independent so the sum order is fixed.
#pragma omp parallel for schedule(dynamic, 4)
  for (int i = 0; i < M; ++i) {
    int k = wavenumber(i, M);
    if (k == half || k == 0) continue;
    MpReal tmp(ctx), c(ctx), one(ctx, 1);
    MpComplex fv(ctx);
    MpReal tk = k < 0 ? -t_[static_cast<size_t>(-k)] : t_[static_cast<size_t>(k)];
    for (int n = 1; n <= n_max_; ++n) {
      MpComplex& acc = a[static_cast<size_t>(n)][static_cast<size_t>(i)];
      const ModeVector& F = fpow_modes_[static_cast<size_t>(n)];
      for (int j = -half + 1; j < half; ++j) {
        if (j == 0 || std::abs(k - j) >= half) continue;
        const MpComplex& vj = v[slot(j, M)];
        if (vj.is_zero()) continue;
        MpReal tj = j < 0 ? -t_[static_cast<size_t>(-j)] : t_[static_cast<size_t>(j)];
        if (n % 2 == 0) c = tk - tj;
        else {
          c = tk * tj;
          c = one - c;
        }
        if (c.is_zero()) continue;
        c *= static_cast<long>(j);
        mp::mul(fv, F[slot(k - j, M)], vj, tmp);
        mp::add_mul(acc, fv, c);
      }
      MpReal kp = kpow_[static_cast<size_t>(n)][static_cast<size_t>(std::abs(k))];
      if (k < 0 && n % 2) kp = -kp;
      acc *= kp;
    }
  }
  Fourier fourier(M, ctx);
  recurse(g, a, -1, fourier);
  return g;
}

// ---------------------------------------------------------------- full matrices

namespace {

CsTerms run_recursion(const WaveProfile& f, int n_max, int M, int K, bool filter, bool parallel) {
  if (K < 2 || K > M) throw std::invalid_argument("need 2 <= K <= M");
  CsEngine engine(f, n_max, M, filter);
  PrecisionCtx ctx = f.ctx();
  const int ncols = K / 2;
  CsTerms out;
  for (int n = 0; n <= n_max; ++n) {
    out.a.emplace_back(n, M, ncols, ctx);
    out.g.emplace_back(n, M, ncols, ctx);
  }
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
  for (int j = 0; j < ncols; ++j) {
    CsEngine::Column c = engine.column(j);
    for (int n = 0; n <= n_max; ++n) {
      out.a[static_cast<size_t>(n)].column(j) = std::move(c.a[static_cast<size_t>(n)]);
      out.g[static_cast<size_t>(n)].column(j) = std::move(c.g[static_cast<size_t>(n)]);
    }
  }
  return out;
}

// ‖A_n‖_F from the entry formula over 0 < j < M/2, |k − j| < M/2 (k < 0 only at infinite
// depth, where the other rows vanish), doubled for the mirrored columns.
MpReal norm_a(const CsEngine& e, int n) {
  PrecisionCtx ctx = e.ctx();
  const int M = e.M(), half = M / 2;
  if (n == 0) return MpReal(ctx);
  MpReal sum(ctx);
  const ModeVector& F = e.fpow_modes(n);
  if (e.depth().is_infinite()) {
    // |A_kj| = 2|k|^n j/n! |(f^n)^_{k−j}|; group by d = j − k = j + |k|.
    MpReal inner(ctx), w(ctx);
    for (int d = 2; d < half; ++d) {
      MpReal fd = norm(F[slot(-d, M)]);
      if (fd.is_zero()) continue;
      inner = 0L;
      for (int a = 1; a < d; ++a) {
        w = e.kpow(n, a) * static_cast<long>(d - a);
        inner += w * w;
      }
      sum += inner * fd;
    }
    sum = ldexp(sum, 2);
  } else {
    for (int j = 1; j < half; ++j)
      for (int k = j - half + 1; k < half; ++k) mp::add_norm(sum, e.a_entry(n, k, j));
  }
  return sqrt(ldexp(sum, 1));
}

}  // namespace

CsTerms gn_recursion(const WaveProfile& f, int n_max, int M, int K, bool filter) {
  return run_recursion(f, n_max, M, K, filter, true);
}

CsTerms gn_recursion_serial(const WaveProfile& f, int n_max, int M, int K, bool filter) {
  return run_recursion(f, n_max, M, K, filter, false);
}

// ---------------------------------------------------------------- diagnostics

double noise_ratio(const ModeVector& column) {
  const int M = static_cast<int>(column.size());
  std::vector<MpReal> outer, inner;
  for (int i = 0; i < M; ++i) {
    int k = wavenumber(i, M);
    if (2 * k == M) continue;
    (outer_row(k, M) ? outer : inner).push_back(abs(column[static_cast<size_t>(i)]));
  }
  auto median = [](std::vector<MpReal>& v) {
    auto mid = v.begin() + static_cast<long>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end(), [](const MpReal& a, const MpReal& b) { return a < b; });
    return *mid;
  };
  if (outer.empty() || inner.empty()) return 0.0;
  MpReal o = median(outer), in = median(inner);
  if (in.is_zero()) return o.is_zero() ? 0.0 : std::numeric_limits<double>::infinity();
  return (o / in).to_double();
}

MpReal CancellationReport::scaled_norm_a(int n) const {
  if (!rescale) return norm_a[static_cast<size_t>(n)];
  return norm_a[static_cast<size_t>(n)] * pow(*rescale, static_cast<long>(n));
}

bool CancellationReport::noise_flagged() const {
  return std::any_of(noise_ratio.begin(), noise_ratio.end(), [](double r) { return r > 1.0; });
}

CancellationReport cancellation_report(const CsEngine& engine, int K, bool symmetry, std::optional<MpReal> rescale) {
  const int M = engine.M(), n_max = engine.n_max(), hk = K / 2;
  if (K < 2 || K > M) throw std::invalid_argument("need 2 <= K <= M");
  PrecisionCtx ctx = engine.ctx();
  CancellationReport rep;
  rep.rescale = std::move(rescale);
  rep.tail_log10 = engine.tail_log10();
  rep.tail_warning = engine.tail_warning();
  rep.norm_a.assign(static_cast<size_t>(n_max + 1), MpReal(ctx));
  rep.noise_ratio.assign(static_cast<size_t>(n_max + 1), 0.0);
  std::vector<MpReal> sum_g(static_cast<size_t>(n_max + 1), MpReal(ctx));

#pragma omp parallel for schedule(dynamic, 1)
  for (int n = 1; n <= n_max; ++n) rep.norm_a[static_cast<size_t>(n)] = norm_a(engine, n);

  // block[n][j][k + hk] holds G_n entries for 0 < j < K/2, |k| < K/2.
  std::vector<std::vector<std::vector<MpComplex>>> block;
  if (symmetry) block.assign(static_cast<size_t>(n_max + 1), std::vector<std::vector<MpComplex>>(static_cast<size_t>(hk)));

  const int B = batch_size();
  for (int j0 = 1; j0 < hk; j0 += B) {
    const int j1 = std::min(hk, j0 + B);
    std::vector<CsEngine::Column> cols(static_cast<size_t>(j1 - j0));
#pragma omp parallel for schedule(dynamic, 1)
    for (int j = j0; j < j1; ++j) cols[static_cast<size_t>(j - j0)] = engine.column(j);
    for (auto& c : cols) {
      for (int n = 0; n <= n_max; ++n) {
        const ModeVector& g = c.g[static_cast<size_t>(n)];
        for (int k = -hk + 1; k < hk; ++k) mp::add_norm(sum_g[static_cast<size_t>(n)], g[slot(k, M)]);
        rep.noise_ratio[static_cast<size_t>(n)] = std::max(rep.noise_ratio[static_cast<size_t>(n)], noise_ratio(g));
        if (symmetry) {
          auto& b = block[static_cast<size_t>(n)][static_cast<size_t>(c.j)];
          for (int k = -hk + 1; k < hk; ++k) b.push_back(g[slot(k, M)]);
        }
      }
    }
  }

  for (int n = 0; n <= n_max; ++n) rep.norm_g.push_back(sqrt(ldexp(sum_g[static_cast<size_t>(n)], 1)));

  rep.r.assign(static_cast<size_t>(n_max + 1), MpReal(ctx));
  if (symmetry) {
    for (int n = 0; n <= n_max; ++n) {
      const auto& b = block[static_cast<size_t>(n)];
      auto at = [&](int k, int j) -> MpComplex {  // |k|, |j| < K/2, j ≠ 0
        if (j > 0) return b[static_cast<size_t>(j)][static_cast<size_t>(k + hk - 1)];
        return conj(b[static_cast<size_t>(-j)][static_cast<size_t>(-k + hk - 1)]);
      };
      MpReal worst(ctx);
      for (int j = 1; j < hk; ++j)
        for (int k = -hk + 1; k < hk; ++k) {
          if (k == 0) continue;
          worst = max(worst, abs(at(k, j) - conj(at(j, k))));
        }
      const MpReal& ng = rep.norm_g[static_cast<size_t>(n)];
      rep.r[static_cast<size_t>(n)] = ng.is_zero() ? worst : worst / ng;
    }
  }
  return rep;
}

// ---------------------------------------------------------------- applying the terms

std::vector<ModeVector> gn_apply_columns(const CsEngine& engine, const ModeVector& v, int K) {
  const int M = engine.M(), n_max = engine.n_max(), hk = K / 2;
  if (K < 2 || K > M) throw std::invalid_argument("need 2 <= K <= M");
  if (static_cast<int>(v.size()) != M) throw std::invalid_argument("mode vector does not match engine grid");
  PrecisionCtx ctx = engine.ctx();
  std::vector<ModeVector> out(static_cast<size_t>(n_max + 1), zeros(M, ctx));
  MpReal tmp(ctx);
  MpComplex c(ctx);
  const int B = batch_size();
  for (int j0 = 1; j0 < hk; j0 += B) {
    const int j1 = std::min(hk, j0 + B);
    std::vector<CsEngine::Column> cols(static_cast<size_t>(j1 - j0));
#pragma omp parallel for schedule(dynamic, 1)
    for (int j = j0; j < j1; ++j) cols[static_cast<size_t>(j - j0)] = engine.column(j);
    for (const auto& col : cols) {
      const MpComplex& vp = v[slot(col.j, M)];
      const MpComplex& vm = v[slot(-col.j, M)];
      for (int n = 0; n <= n_max; ++n) {
        const ModeVector& g = col.g[static_cast<size_t>(n)];
        ModeVector& o = out[static_cast<size_t>(n)];
        for (int i = 0; i < M; ++i) {
          int k = wavenumber(i, M);
          if (2 * k == M) continue;
          mp::add_mul(o[static_cast<size_t>(i)], g[static_cast<size_t>(i)], vp, tmp);
          c = conj(g[slot(-k, M)]);
          mp::add_mul(o[static_cast<size_t>(i)], c, vm, tmp);
        }
      }
    }
  }
  return out;
}

PartialSumErrors apply_partial_sum(const std::vector<ModeVector>& terms, std::span<const MpReal> neumann, int cutoff) {
  if (terms.empty()) throw std::invalid_argument("no expansion terms");
  const int M = static_cast<int>(terms[0].size());
  if (static_cast<int>(neumann.size()) != M) throw std::invalid_argument("Neumann samples do not match the grid");
  PrecisionCtx ctx = terms[0][0].ctx();
  Fourier fourier(M, ctx);
  ModeVector e = zeros(M, ctx);
  fourier.forward(neumann, e);  // keeps the Nyquist mode of the samples
  PartialSumErrors out;
  for (size_t n = 0; n < terms.size(); ++n) {
    for (int i = 0; i < M; ++i) {
      int k = wavenumber(i, M);
      if (n == 0 || std::abs(k) < cutoff) e[static_cast<size_t>(i)] -= terms[n][static_cast<size_t>(i)];
    }
    MpReal s(ctx);
    for (const auto& z : e) mp::add_norm(s, z);
    out.rms.push_back(sqrt(s));
    out.spectra.push_back(e);
  }
  return out;
}

std::vector<MpReal> cs_neumann(const WaveProfile& eta, const SurfaceField& dirichlet, int n_max) {
  CsEngine engine(eta, n_max, dirichlet.M(), false);
  std::vector<ModeVector> terms = engine.apply(dirichlet.modes());
  ModeVector sum = zeros(dirichlet.M(), eta.ctx());
  for (const auto& t : terms)
    for (size_t i = 0; i < sum.size(); ++i) sum[i] += t[i];
  return fft_inverse_real(sum, dirichlet.grid());
}

}  // namespace dno
