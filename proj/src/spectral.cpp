#include "dno/spectral.hpp"

#include <map>
#include <mutex>
#include <stdexcept>
#include <string>

namespace dno {

std::vector<MpComplex> zeros(int n, const PrecisionCtx& ctx) {
  std::vector<MpComplex> v;
  v.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) v.emplace_back(ctx);
  return v;
}

std::vector<MpReal> real_zeros(int n, const PrecisionCtx& ctx) {
  std::vector<MpReal> v;
  v.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) v.emplace_back(ctx);
  return v;
}

// ---------------------------------------------------------------- grid

Grid::Grid(int M, const PrecisionCtx& ctx) : Grid(M, ldexp(pi(ctx), 1)) {}

Grid::Grid(int M, MpReal L) : M_(M), L_(std::move(L)) {
  if (M < 4) throw std::invalid_argument("grid needs M >= 4, got " + std::to_string(M));
  if (L_.sign() <= 0) throw std::invalid_argument("grid period must be positive");
}

MpReal Grid::x(int j) const { return L_ * static_cast<long>(j) / static_cast<long>(M_); }

std::vector<MpReal> Grid::nodes() const {
  std::vector<MpReal> v;
  v.reserve(static_cast<size_t>(M_));
  for (int j = 0; j < M_; ++j) v.push_back(x(j));
  return v;
}

bool Grid::is_2pi() const {
  MpReal two_pi = ldexp(pi(ctx()), 1);
  return abs(L_ - two_pi) <= ldexp(two_pi, -(ctx().bits() - 3));
}

bool Grid::same_as(const Grid& o) const { return M_ == o.M_ && L_ == o.L_; }

// ---------------------------------------------------------------- fft

struct FftPlan::Scratch {
  explicit Scratch(const PrecisionCtx& ctx, int max_radix)
      : tmp(ctx), t(ctx), s0(ctx), s1(ctx), s2(ctx), s3(ctx), s4(ctx), s5(ctx), generic(zeros(max_radix, ctx)) {}
  MpReal tmp;
  MpComplex t, s0, s1, s2, s3, s4, s5;
  std::vector<MpComplex> generic;
};

struct FftPlan::Bluestein {
  int L = 0;
  std::shared_ptr<const FftPlan> plan;
  std::vector<MpComplex> chirp;      // e^{-πi j²/n}
  std::vector<MpComplex> kernel_fwd;  // DFT of conj(chirp) extended, divided by L
  std::vector<MpComplex> kernel_inv;  // DFT of chirp extended, divided by L
};

namespace {

bool factorize(int n, std::vector<int>& factors) {
  int p = 4;
  while (n > 1) {
    while (n % p != 0) {
      switch (p) {
        case 4: p = 2; break;
        case 2: p = 3; break;
        case 3: p = 5; break;
        default: return false;
      }
    }
    n /= p;
    factors.push_back(p);
    factors.push_back(n);
  }
  return true;
}

MpComplex unit_root(long num, long den, const PrecisionCtx& ctx) {
  // e^{-2πi num/den} evaluated with guard bits.
  PrecisionCtx wide(ctx.bits() + 32);
  MpReal angle = ldexp(pi(wide), 1) * num / den;
  MpComplex w = expi(-angle);
  return MpComplex(MpReal(ctx, w.re), MpReal(ctx, w.im));
}

}  // namespace

FftPlan::FftPlan(int n, const PrecisionCtx& ctx) : n_(n), bits_(ctx.bits()) {
  if (n < 1) throw std::invalid_argument("FFT length must be positive");
  if (!factorize(n, factors_)) {
    factors_.clear();
    auto b = std::make_shared<Bluestein>();
    int L = 1;
    while (L < 2 * n - 1) L *= 2;
    b->L = L;
    b->plan = get(L, ctx);
    for (long j = 0; j < n; ++j) b->chirp.push_back(unit_root((j * j) % (2L * n), 2L * n, ctx));
    std::vector<MpComplex> ext = zeros(L, ctx);
    std::vector<MpComplex> ext_conj = zeros(L, ctx);
    for (int j = 0; j < n; ++j) {
      ext[static_cast<size_t>(j)] = b->chirp[static_cast<size_t>(j)];
      ext_conj[static_cast<size_t>(j)] = conj(b->chirp[static_cast<size_t>(j)]);
      if (j > 0) {
        ext[static_cast<size_t>(L - j)] = ext[static_cast<size_t>(j)];
        ext_conj[static_cast<size_t>(L - j)] = ext_conj[static_cast<size_t>(j)];
      }
    }
    b->kernel_fwd = zeros(L, ctx);
    b->kernel_inv = zeros(L, ctx);
    b->plan->transform(ext_conj, b->kernel_fwd, false);
    b->plan->transform(ext, b->kernel_inv, false);
    for (int j = 0; j < L; ++j) {
      b->kernel_fwd[static_cast<size_t>(j)] /= MpReal(ctx, L);
      b->kernel_inv[static_cast<size_t>(j)] /= MpReal(ctx, L);
    }
    bluestein_ = std::move(b);
    return;
  }
  tw_.reserve(static_cast<size_t>(n));
  tw_inv_.reserve(static_cast<size_t>(n));
  for (int t = 0; t < n; ++t) {
    tw_.push_back(unit_root(t, n, ctx));
    tw_inv_.push_back(conj(tw_.back()));
  }
}

std::shared_ptr<const FftPlan> FftPlan::get(int n, const PrecisionCtx& ctx) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const FftPlan>> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({n, ctx.bits()});
    if (it != cache.end()) return it->second;
  }
  auto plan = std::make_shared<const FftPlan>(n, ctx);
  std::lock_guard<std::mutex> lock(mu);
  auto [it, inserted] = cache.emplace(std::make_pair(n, ctx.bits()), plan);
  return it->second;
}

void FftPlan::transform(std::span<const MpComplex> in, std::span<MpComplex> out, bool inverse) const {
  if (static_cast<int>(in.size()) != n_ || static_cast<int>(out.size()) != n_)
    throw std::invalid_argument("FFT buffer length mismatch");
  PrecisionCtx ctx(bits_);
  if (bluestein_) {
    const Bluestein& b = *bluestein_;
    MpReal tmp(ctx);
    std::vector<MpComplex> a = zeros(b.L, ctx);
    std::vector<MpComplex> ah = zeros(b.L, ctx);
    for (int j = 0; j < n_; ++j) {
      const MpComplex& w = b.chirp[static_cast<size_t>(j)];
      if (inverse)
        mp::mul_conj(a[static_cast<size_t>(j)], w, in[static_cast<size_t>(j)], tmp);
      else
        mp::mul(a[static_cast<size_t>(j)], w, in[static_cast<size_t>(j)], tmp);
    }
    b.plan->transform(a, ah, false);
    const auto& kern = inverse ? b.kernel_inv : b.kernel_fwd;
    for (int j = 0; j < b.L; ++j) mp::mul(ah[static_cast<size_t>(j)], ah[static_cast<size_t>(j)], kern[static_cast<size_t>(j)], tmp);
    b.plan->transform(ah, a, true);
    for (int k = 0; k < n_; ++k) {
      const MpComplex& w = b.chirp[static_cast<size_t>(k)];
      if (inverse)
        mp::mul_conj(out[static_cast<size_t>(k)], w, a[static_cast<size_t>(k)], tmp);
      else
        mp::mul(out[static_cast<size_t>(k)], w, a[static_cast<size_t>(k)], tmp);
    }
    return;
  }
  if (n_ == 1) {
    out[0] = in[0];
    return;
  }
  int max_radix = 5;
  Scratch s(ctx, max_radix);
  work(out.data(), in.data(), 1, factors_.data(), inverse, s);
}

void FftPlan::work(MpComplex* out, const MpComplex* in, int fstride, const int* factors, bool inverse,
                   Scratch& s) const {
  const int p = factors[0];
  const int m = factors[1];
  MpComplex* const begin = out;
  MpComplex* const end = out + p * m;
  if (m == 1) {
    for (MpComplex* o = out; o != end; ++o, in += fstride) *o = *in;
  } else {
    for (MpComplex* o = out; o != end; o += m, in += fstride) work(o, in, fstride * p, factors + 2, inverse, s);
  }
  switch (p) {
    case 2: bfly2(begin, fstride, m, inverse, s); break;
    case 4: bfly4(begin, fstride, m, inverse, s); break;
    default: bfly_generic(begin, fstride, m, p, inverse, s); break;
  }
}

void FftPlan::bfly2(MpComplex* out, int fstride, int m, bool inverse, Scratch& s) const {
  const auto& tw = inverse ? tw_inv_ : tw_;
  MpComplex* out2 = out + m;
  for (int k = 0; k < m; ++k) {
    mp::mul(s.t, out2[k], tw[static_cast<size_t>(k * fstride)], s.tmp);
    mp::sub(out2[k], out[k], s.t);
    mp::add(out[k], out[k], s.t);
  }
}

void FftPlan::bfly4(MpComplex* out, int fstride, int m, bool inverse, Scratch& s) const {
  const auto& tw = inverse ? tw_inv_ : tw_;
  const int m2 = 2 * m, m3 = 3 * m;
  for (int k = 0; k < m; ++k) {
    MpComplex* f = out + k;
    mp::mul(s.s0, f[m], tw[static_cast<size_t>(k * fstride)], s.tmp);
    mp::mul(s.s1, f[m2], tw[static_cast<size_t>(2 * k * fstride)], s.tmp);
    mp::mul(s.s2, f[m3], tw[static_cast<size_t>(3 * k * fstride)], s.tmp);
    mp::sub(s.s5, f[0], s.s1);
    mp::add(f[0], f[0], s.s1);
    mp::add(s.s3, s.s0, s.s2);
    mp::sub(s.s4, s.s0, s.s2);
    mp::sub(f[m2], f[0], s.s3);
    mp::add(f[0], f[0], s.s3);
    if (inverse) {
      mpfr_sub(f[m].re.raw(), s.s5.re.raw(), s.s4.im.raw(), MPFR_RNDN);
      mpfr_add(f[m].im.raw(), s.s5.im.raw(), s.s4.re.raw(), MPFR_RNDN);
      mpfr_add(f[m3].re.raw(), s.s5.re.raw(), s.s4.im.raw(), MPFR_RNDN);
      mpfr_sub(f[m3].im.raw(), s.s5.im.raw(), s.s4.re.raw(), MPFR_RNDN);
    } else {
      mpfr_add(f[m].re.raw(), s.s5.re.raw(), s.s4.im.raw(), MPFR_RNDN);
      mpfr_sub(f[m].im.raw(), s.s5.im.raw(), s.s4.re.raw(), MPFR_RNDN);
      mpfr_sub(f[m3].re.raw(), s.s5.re.raw(), s.s4.im.raw(), MPFR_RNDN);
      mpfr_add(f[m3].im.raw(), s.s5.im.raw(), s.s4.re.raw(), MPFR_RNDN);
    }
  }
}

void FftPlan::bfly_generic(MpComplex* out, int fstride, int m, int p, bool inverse, Scratch& s) const {
  const auto& tw = inverse ? tw_inv_ : tw_;
  for (int u = 0; u < m; ++u) {
    for (int q1 = 0, k = u; q1 < p; ++q1, k += m) s.generic[static_cast<size_t>(q1)] = out[k];
    for (int q1 = 0, k = u; q1 < p; ++q1, k += m) {
      int twidx = 0;
      out[k] = s.generic[0];
      for (int q = 1; q < p; ++q) {
        twidx += fstride * k;
        if (twidx >= n_) twidx -= n_;
        mp::add_mul(out[k], s.generic[static_cast<size_t>(q)], tw[static_cast<size_t>(twidx)], s.tmp);
      }
    }
  }
}

// ---------------------------------------------------------------- workspace

Fourier::Fourier(int M, const PrecisionCtx& ctx)
    : M_(M), plan_(FftPlan::get(M, ctx)), buf_(zeros(M, ctx)), inv_M_(MpReal(ctx, 1) / static_cast<long>(M)) {
  if (M < 4) throw std::invalid_argument("transform length must be >= 4");
}

void Fourier::forward(std::span<const MpComplex> values, std::span<MpComplex> modes) {
  if (values.data() == modes.data()) {
    for (int i = 0; i < M_; ++i) buf_[static_cast<size_t>(i)] = values[static_cast<size_t>(i)];
    plan_->transform(buf_, modes, false);
  } else {
    plan_->transform(values, modes, false);
  }
  for (auto& z : modes) mp::mul(z, z, inv_M_);
}

void Fourier::forward(std::span<const MpReal> values, std::span<MpComplex> modes) {
  for (int i = 0; i < M_; ++i) {
    buf_[static_cast<size_t>(i)].re = values[static_cast<size_t>(i)];
    mpfr_set_zero(buf_[static_cast<size_t>(i)].im.raw(), 1);
  }
  plan_->transform(buf_, modes, false);
  for (auto& z : modes) mp::mul(z, z, inv_M_);
}

void Fourier::inverse(std::span<const MpComplex> modes, std::span<MpComplex> values) {
  for (int i = 0; i < M_; ++i) buf_[static_cast<size_t>(i)] = modes[static_cast<size_t>(i)];
  if (M_ % 2 == 0) mp::set_zero(buf_[static_cast<size_t>(M_ / 2)]);
  plan_->transform(buf_, values, true);
}

void Fourier::inverse_real(std::span<const MpComplex> modes, std::span<MpReal> values) {
  std::vector<MpComplex> tmp = zeros(M_, PrecisionCtx(plan_->bits()));
  inverse(modes, tmp);
  for (int i = 0; i < M_; ++i) values[static_cast<size_t>(i)] = std::move(tmp[static_cast<size_t>(i)].re);
}

ModeVector fft_forward(std::span<const MpComplex> values, const Grid& grid) {
  if (static_cast<int>(values.size()) != grid.M()) throw std::invalid_argument("sample count does not match grid");
  Fourier f(grid.M(), grid.ctx());
  ModeVector modes = zeros(grid.M(), grid.ctx());
  f.forward(values, modes);
  return modes;
}

ModeVector fft_forward(std::span<const MpReal> values, const Grid& grid) {
  if (static_cast<int>(values.size()) != grid.M()) throw std::invalid_argument("sample count does not match grid");
  Fourier f(grid.M(), grid.ctx());
  ModeVector modes = zeros(grid.M(), grid.ctx());
  f.forward(values, modes);
  return modes;
}

std::vector<MpComplex> fft_inverse(std::span<const MpComplex> modes, const Grid& grid) {
  if (static_cast<int>(modes.size()) != grid.M()) throw std::invalid_argument("mode count does not match grid");
  Fourier f(grid.M(), grid.ctx());
  std::vector<MpComplex> values = zeros(grid.M(), grid.ctx());
  f.inverse(modes, values);
  return values;
}

std::vector<MpReal> fft_inverse_real(std::span<const MpComplex> modes, const Grid& grid) {
  if (static_cast<int>(modes.size()) != grid.M()) throw std::invalid_argument("mode count does not match grid");
  Fourier f(grid.M(), grid.ctx());
  std::vector<MpReal> values = real_zeros(grid.M(), grid.ctx());
  f.inverse_real(modes, values);
  return values;
}

// ---------------------------------------------------------------- fields

SurfaceField SurfaceField::from_values(const Grid& grid, std::vector<MpReal> values) {
  if (static_cast<int>(values.size()) != grid.M()) throw std::invalid_argument("sample count does not match grid");
  ModeVector modes = fft_forward(std::span<const MpReal>(values), grid);
  if (grid.M() % 2 == 0) mp::set_zero(modes[static_cast<size_t>(grid.M() / 2)]);
  return SurfaceField(grid, std::move(values), std::move(modes));
}

SurfaceField SurfaceField::from_modes(const Grid& grid, ModeVector modes) {
  const int M = grid.M();
  if (static_cast<int>(modes.size()) != M) throw std::invalid_argument("mode count does not match grid");
  PrecisionCtx ctx = grid.ctx();
  MpReal scale(ctx);
  for (const auto& z : modes) scale = max(scale, abs(z));
  MpReal tol = ldexp(scale, -(ctx.bits() - 8));
  if (abs(modes[0].im) > tol) throw std::invalid_argument("mean mode of a real field must be real");
  for (int k = 1; 2 * k < M; ++k) {
    MpComplex d = modes[static_cast<size_t>(mode_index(-k, M))] - conj(modes[static_cast<size_t>(k)]);
    if (abs(d) > tol) throw std::invalid_argument("modes of a real field must be conjugate symmetric");
    modes[static_cast<size_t>(mode_index(-k, M))] = conj(modes[static_cast<size_t>(k)]);
  }
  mpfr_set_zero(modes[0].im.raw(), 1);
  if (M % 2 == 0) mp::set_zero(modes[static_cast<size_t>(M / 2)]);
  std::vector<MpReal> values = fft_inverse_real(modes, grid);
  return SurfaceField(grid, std::move(values), std::move(modes));
}

SurfaceField SurfaceField::from_function(const Grid& grid, const std::function<MpReal(const MpReal&)>& f) {
  std::vector<MpReal> values;
  values.reserve(static_cast<size_t>(grid.M()));
  for (int j = 0; j < grid.M(); ++j) values.emplace_back(grid.ctx(), f(grid.x(j)));
  return from_values(grid, std::move(values));
}

const MpComplex& SurfaceField::mode(int k) const {
  if (2 * std::abs(k) >= M()) throw std::out_of_range("wavenumber outside the resolved band");
  return modes_[static_cast<size_t>(mode_index(k, M()))];
}

// ---------------------------------------------------------------- multipliers

void apply_multiplier(ModeVector& modes, const Symbol& symbol) {
  const int M = static_cast<int>(modes.size());
  MpReal tmp(modes.empty() ? PrecisionCtx(53) : modes[0].ctx());
  for (int i = 0; i < M; ++i) {
    int k = wavenumber(i, M);
    if (2 * k == M) {
      mp::set_zero(modes[static_cast<size_t>(i)]);
      continue;
    }
    MpComplex s = symbol(k);
    if (!s.is_finite()) throw std::domain_error("non-finite multiplier at k = " + std::to_string(k));
    mp::mul(modes[static_cast<size_t>(i)], modes[static_cast<size_t>(i)], s, tmp);
  }
}

SurfaceField apply_multiplier(const SurfaceField& field, const Symbol& symbol) {
  const int M = field.M();
  PrecisionCtx ctx = field.grid().ctx();
  for (int k = 0; 2 * k < M; ++k) {
    MpComplex a = symbol(k), b = symbol(-k);
    MpReal tol = ldexp(max(abs(a), MpReal(ctx, 1)), -(ctx.bits() - 4));
    if (abs(b - conj(a)) > tol)
      throw std::invalid_argument("multiplier does not preserve real fields at k = " + std::to_string(k));
  }
  ModeVector modes = field.modes();
  apply_multiplier(modes, symbol);
  return SurfaceField::from_modes(field.grid(), std::move(modes));
}

namespace symbols {

Symbol d(const PrecisionCtx& ctx) {
  return [ctx](int k) { return MpComplex(ctx, static_cast<double>(k)); };
}

Symbol ddx(const PrecisionCtx& ctx) {
  return [ctx](int k) { return MpComplex(ctx, 0.0, static_cast<double>(k)); };
}

Symbol abs_d(const PrecisionCtx& ctx) {
  return [ctx](int k) { return MpComplex(ctx, static_cast<double>(std::abs(k))); };
}

Symbol abs_d_pow(int n, const PrecisionCtx& ctx) {
  return [ctx, n](int k) { return MpComplex(pow(MpReal(ctx, std::abs(k)), static_cast<long>(n))); };
}

Symbol tanh_hd(const MpReal& h) {
  return [h](int k) { return MpComplex(tanh(h * static_cast<long>(std::abs(k)))); };
}

Symbol g0(const Depth& depth, const PrecisionCtx& ctx) {
  if (depth.is_infinite()) return abs_d(ctx);
  MpReal h(ctx, depth.h());
  return [h](int k) {
    long ak = std::abs(k);
    return MpComplex(tanh(h * ak) * ak);
  };
}

Symbol hilbert(const PrecisionCtx& ctx) {
  return [ctx](int k) { return MpComplex(ctx, 0.0, k > 0 ? -1.0 : (k < 0 ? 1.0 : 0.0)); };
}

}  // namespace symbols

std::vector<MpComplex> spectral_ddx(std::span<const MpComplex> values, Fourier& fourier) {
  const int M = fourier.M();
  PrecisionCtx ctx = values[0].ctx();
  ModeVector modes = zeros(M, ctx);
  fourier.forward(values, modes);
  MpReal tmp(ctx);
  for (int i = 0; i < M; ++i) {
    int k = wavenumber(i, M);
    MpComplex& z = modes[static_cast<size_t>(i)];
    if (2 * k == M) {
      mp::set_zero(z);
      continue;
    }
    // ik (a + ib) = -kb + ika
    mpfr_swap(z.re.raw(), z.im.raw());
    mpfr_mul_si(z.re.raw(), z.re.raw(), -k, MPFR_RNDN);
    mpfr_mul_si(z.im.raw(), z.im.raw(), k, MPFR_RNDN);
  }
  std::vector<MpComplex> out = zeros(M, ctx);
  fourier.inverse(modes, out);
  return out;
}

MpComplex trapezoid_ip(const Grid& grid, std::span<const MpComplex> f, std::span<const MpComplex> g) {
  if (static_cast<int>(f.size()) != grid.M() || static_cast<int>(g.size()) != grid.M())
    throw std::invalid_argument("inner product operands are not on the grid");
  PrecisionCtx ctx = grid.ctx();
  MpComplex acc(ctx);
  MpReal tmp(ctx);
  for (int j = 0; j < grid.M(); ++j) mp::add_conj_mul(acc, g[static_cast<size_t>(j)], f[static_cast<size_t>(j)], tmp);
  acc *= grid.L() / static_cast<long>(grid.M());
  return acc;
}

MpComplex trapezoid_ip(const SurfaceField& f, const SurfaceField& g) {
  if (!f.grid().same_as(g.grid())) throw std::invalid_argument("inner product operands live on different grids");
  PrecisionCtx ctx = f.grid().ctx();
  MpReal acc(ctx);
  for (int j = 0; j < f.M(); ++j) mpfr_fma(acc.raw(), f.value(j).raw(), g.value(j).raw(), acc.raw(), MPFR_RNDN);
  return MpComplex(acc * f.grid().L() / static_cast<long>(f.M()));
}

// ---------------------------------------------------------------- chebyshev

std::vector<MpReal> cheb_nodes(int N, const PrecisionCtx& ctx) {
  if (N < 2) throw std::invalid_argument("Chebyshev degree must be at least 2");
  std::vector<MpReal> s;
  MpReal p = pi(ctx);
  for (int i = 0; i <= N; ++i) {
    if (2 * i == N)
      s.emplace_back(ctx);
    else
      s.push_back(cos(p * static_cast<long>(i) / static_cast<long>(N)));
  }
  return s;
}

ChebCoeffs cheb_transform(std::span<const MpComplex> nodal) {
  const int N = static_cast<int>(nodal.size()) - 1;
  if (N < 2) throw std::invalid_argument("Chebyshev degree must be at least 2");
  PrecisionCtx ctx = nodal[0].ctx();
  const int n2 = 2 * N;
  std::vector<MpComplex> ext = zeros(n2, ctx);
  for (int i = 0; i <= N; ++i) ext[static_cast<size_t>(i)] = nodal[static_cast<size_t>(i)];
  for (int i = 1; i < N; ++i) ext[static_cast<size_t>(n2 - i)] = nodal[static_cast<size_t>(i)];
  std::vector<MpComplex> spec = zeros(n2, ctx);
  FftPlan::get(n2, ctx)->transform(ext, spec, false);
  ChebCoeffs out;
  out.alpha.reserve(static_cast<size_t>(N + 1));
  for (int j = 0; j <= N; ++j) {
    long den = (j == 0 || j == N) ? 2L * N : static_cast<long>(N);
    MpComplex a = spec[static_cast<size_t>(j)];
    a.re /= den;
    a.im /= den;
    out.alpha.push_back(std::move(a));
  }
  return out;
}

std::vector<MpComplex> cheb_inverse(const ChebCoeffs& coeffs) {
  const int N = coeffs.N();
  if (N < 2) throw std::invalid_argument("Chebyshev degree must be at least 2");
  PrecisionCtx ctx = coeffs.alpha[0].ctx();
  const int n2 = 2 * N;
  std::vector<MpComplex> ext = zeros(n2, ctx);
  for (int j = 0; j <= N; ++j) ext[static_cast<size_t>(j)] = coeffs.alpha[static_cast<size_t>(j)];
  for (int j = 1; j < N; ++j) ext[static_cast<size_t>(n2 - j)] = coeffs.alpha[static_cast<size_t>(j)];
  std::vector<MpComplex> spec = zeros(n2, ctx);
  FftPlan::get(n2, ctx)->transform(ext, spec, false);
  std::vector<MpComplex> out;
  out.reserve(static_cast<size_t>(N + 1));
  for (int i = 0; i <= N; ++i) {
    MpComplex v = spec[static_cast<size_t>(i)] + coeffs.alpha[0];
    if (i % 2 == 0)
      v += coeffs.alpha[static_cast<size_t>(N)];
    else
      v -= coeffs.alpha[static_cast<size_t>(N)];
    v.re = ldexp(v.re, -1);
    v.im = ldexp(v.im, -1);
    out.push_back(std::move(v));
  }
  return out;
}

ChebCoeffs cheb_differentiate(const ChebCoeffs& alpha) {
  const int N = alpha.N();
  if (N < 0) throw std::invalid_argument("empty Chebyshev series");
  PrecisionCtx ctx = alpha.alpha[0].ctx();
  ChebCoeffs beta;
  beta.alpha = zeros(N + 1, ctx);
  // d/ds Σ α_j T_j: β_{j} = β_{j+2} + 2(j+1) α_{j+1} for j ≥ 1, β_0 = β_2/2 + α_1.
  for (int j = N - 1; j >= 1; --j) {
    MpComplex b = alpha.alpha[static_cast<size_t>(j + 1)] * MpReal(ctx, 2L * (j + 1));
    if (j + 2 <= N) b += beta.alpha[static_cast<size_t>(j + 2)];
    beta.alpha[static_cast<size_t>(j)] = std::move(b);
  }
  if (N >= 1) {
    MpComplex b = alpha.alpha[1];
    if (N >= 2) {
      const MpComplex& b2 = beta.alpha[2];
      b += MpComplex(ldexp(b2.re, -1), ldexp(b2.im, -1));
    }
    beta.alpha[0] = std::move(b);
  }
  return beta;
}

MpComplex clenshaw_eval(const ChebCoeffs& alpha, const MpReal& s) {
  if (s < -1L || s > 1L) throw std::domain_error("Chebyshev evaluation point outside [-1, 1]");
  const int N = alpha.N();
  PrecisionCtx ctx = alpha.alpha[0].ctx();
  MpComplex b1(ctx), b2(ctx), t(ctx);
  MpReal two_s = ldexp(MpReal(ctx, s), 1);
  for (int k = N; k >= 1; --k) {
    // t = α_k + 2s b1 - b2
    mp::sub(t, alpha.alpha[static_cast<size_t>(k)], b2);
    mp::add_mul(t, b1, two_s);
    std::swap(b2, b1);
    std::swap(b1, t);
  }
  MpComplex r = alpha.alpha[0] - b2;
  mp::add_mul(r, b1, MpReal(ctx, s));
  return r;
}

MpReal rms(std::span<const MpReal> v) {
  if (v.empty()) throw std::invalid_argument("rms of an empty sequence");
  MpReal acc(v[0].ctx());
  for (const auto& x : v) acc += x * x;
  return sqrt(acc / static_cast<long>(v.size()));
}

MpReal rms_diff(std::span<const MpReal> a, std::span<const MpReal> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("rms_diff needs equal non-empty lengths");
  MpReal acc(a[0].ctx()), d(a[0].ctx());
  for (size_t j = 0; j < a.size(); ++j) {
    d = a[j] - b[j];
    acc += d * d;
  }
  return sqrt(acc / static_cast<long>(a.size()));
}

}  // namespace dno
