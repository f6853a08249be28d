#include "dno/afm.hpp"

#include <mpfr.h>

#include <cmath>
#include <stdexcept>

namespace dno {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

std::vector<MpReal> real_part(const std::vector<MpComplex>& v) {
  std::vector<MpReal> r;
  r.reserve(v.size());
  for (const auto& z : v) r.push_back(z.re);
  return r;
}

std::vector<MpComplex> as_complex(std::span<const MpReal> v) {
  std::vector<MpComplex> r;
  r.reserve(v.size());
  for (const auto& x : v) r.emplace_back(x);
  return r;
}

MpReal rms(std::span<const MpComplex> approx, std::span<const MpReal> exact) {
  PrecisionCtx ctx = exact[0].ctx();
  MpReal s(ctx), d(ctx);
  for (size_t j = 0; j < exact.size(); ++j) {
    d = approx[j].re - exact[j];
    s += d * d;
  }
  return sqrt(s / static_cast<long>(exact.size()));
}

// Column weights r_k, s_k at one sample; k ≥ 0.
void weights(int k, const MpReal& eta, const MpReal& eta_max, const Depth& depth, MpReal& r, MpReal& s) {
  PrecisionCtx ctx = eta.ctx();
  if (depth.is_infinite()) {
    r = exp((eta - eta_max) * static_cast<long>(k));
    s = r;
    return;
  }
  // cosh a / cosh b and sinh a / cosh b without forming cosh of large arguments.
  MpReal a = (eta + depth.h()) * static_cast<long>(k), b = (eta_max + depth.h()) * static_cast<long>(k);
  MpReal e = exp(a - b), ea = exp(-2L * a), eb = exp(-2L * b);
  r = e * (ea + 1L) / (eb + 1L);
  s = e * (MpReal(ctx, 1) - ea) / (eb + 1L);
}

std::vector<MpComplex> lower_solve_adjoint(const DenseMatrix& R, std::vector<MpComplex> y) {
  // R* u = y with R upper triangular.
  const int n = R.rows();
  PrecisionCtx ctx = R.ctx();
  MpReal tmp(ctx);
  MpComplex neg(ctx);
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < i; ++l) {
      neg = -y[static_cast<size_t>(l)];
      mp::add_conj_mul(y[static_cast<size_t>(i)], R(l, i), neg, tmp);
    }
    if (R(i, i).is_zero()) throw SingularMatrixError(i, "QR factor is singular");
    y[static_cast<size_t>(i)] /= conj(R(i, i));
  }
  return y;
}

std::vector<MpComplex> upper_solve(const DenseMatrix& R, std::vector<MpComplex> y) {
  const int n = R.rows();
  PrecisionCtx ctx = R.ctx();
  MpReal tmp(ctx);
  MpComplex neg(ctx);
  for (int i = n - 1; i >= 0; --i) {
    for (int l = i + 1; l < n; ++l) {
      neg = -y[static_cast<size_t>(l)];
      mp::add_mul(y[static_cast<size_t>(i)], R(i, l), neg, tmp);
    }
    if (R(i, i).is_zero()) throw SingularMatrixError(i, "QR factor is singular");
    y[static_cast<size_t>(i)] /= R(i, i);
  }
  return y;
}

// −∂ₓ (B c) on the grid.
std::vector<MpComplex> minus_ddx_of_B(const AfmSystem& sys, std::span<const MpComplex> c) {
  std::vector<MpComplex> v = matvec(sys.B, c);
  Fourier fourier(sys.grid.M(), sys.grid.ctx());
  v = spectral_ddx(v, fourier);
  for (auto& z : v) z = -z;
  return v;
}

std::vector<MpComplex> b_adjoint_dx(const AfmSystem& sys, const SurfaceField& dirichlet) {
  require(dirichlet.grid().same_as(sys.grid), "Dirichlet data must live on the AFM grid");
  std::vector<MpReal> dx = spectral_derivative(dirichlet.values(), sys.grid);
  return matvec_adjoint(sys.B, as_complex(dx));
}

}  // namespace

std::vector<MpReal> spectral_derivative(std::span<const MpReal> values, const Grid& grid) {
  ModeVector modes = fft_forward(values, grid);
  apply_multiplier(modes, symbols::ddx(grid.ctx()));
  modes[static_cast<size_t>(grid.M() / 2)] = MpComplex(grid.ctx());
  return fft_inverse_real(modes, grid);
}

AfmSystem build_system(const WaveProfile& profile, int K, int M, std::optional<AfmForm> form) {
  require(K >= 4 && K % 2 == 0, "K must be even and at least 4");
  require(M >= K, "AFM needs M >= K");
  PrecisionCtx ctx = profile.ctx();
  Grid grid(M, ctx);
  require(grid.same_as(Grid(M, profile.L())), "AFM requires period 2π");
  const Depth& depth = profile.depth();
  AfmForm f = form.value_or(depth.is_infinite() ? AfmForm::complex_exp : AfmForm::real_trig);
  MpReal eta_max = profile.eta_max();
  std::vector<MpReal> eta = profile.samples(grid);
  for (const auto& e : eta) eta_max = max(eta_max, e);

  // e^{−(K/2)(η_max − η_min)} must stay representable.
  MpReal span_(ctx);
  for (const auto& e : eta) span_ = max(span_, eta_max - e);
  double decay_bits = span_.to_double() * (K / 2) / std::log(2.0);
  if (decay_bits > 0.5 * -static_cast<double>(mpfr_get_emin()))
    throw std::overflow_error("AFM column weights underflow the exponent range");

  const int ncols = K - 1;
  AfmSystem sys{DenseMatrix(M, ncols, ctx), DenseMatrix(M, ncols, ctx), profile, eta_max, grid, f, K, {}};
  sys.wavenumber.resize(static_cast<size_t>(ncols));
  sys.wavenumber[0] = 0;
  for (int k = 1; k < K / 2; ++k) {
    if (f == AfmForm::complex_exp) {
      sys.wavenumber[static_cast<size_t>(2 * k - 1)] = k;
      sys.wavenumber[static_cast<size_t>(2 * k)] = -k;
    } else {
      sys.wavenumber[static_cast<size_t>(2 * k - 1)] = k;
      sys.wavenumber[static_cast<size_t>(2 * k)] = k;
    }
  }

  // Roots of unity e^{2πi m/M}, indexed by m = kj mod M.
  std::vector<MpComplex> roots;
  roots.reserve(static_cast<size_t>(M));
  MpReal two_pi = ldexp(pi(ctx), 1);
  for (int m = 0; m < M; ++m) roots.push_back(expi(two_pi * static_cast<long>(m) / static_cast<long>(M)));

  MpReal invM = MpReal(ctx, 1) / static_cast<long>(M);
  MpReal sqrt2M = sqrt(MpReal(ctx, 2)) / static_cast<long>(M);
  for (int j = 0; j < M; ++j) sys.A(j, 0) = MpComplex(invM);

#pragma omp parallel for schedule(dynamic)
  for (int k = 1; k < K / 2; ++k) {
    MpReal r(ctx), s(ctx);
    for (int j = 0; j < M; ++j) {
      weights(k, eta[static_cast<size_t>(j)], eta_max, depth, r, s);
      const MpComplex& w = roots[static_cast<size_t>((static_cast<long>(k) * j) % M)];
      if (f == AfmForm::complex_exp) {
        MpReal ra = r * invM, sa = s * invM;
        // A: ra e^{±ikx}; B: ±i sa e^{±ikx}
        sys.A(j, 2 * k - 1) = MpComplex(w.re * ra, w.im * ra);
        sys.A(j, 2 * k) = MpComplex(w.re * ra, -(w.im * ra));
        sys.B(j, 2 * k - 1) = MpComplex(-(w.im * sa), w.re * sa);
        sys.B(j, 2 * k) = MpComplex(-(w.im * sa), -(w.re * sa));
      } else {
        MpReal ra = r * sqrt2M, sa = s * sqrt2M;
        // cos kx ↦ −s sin kx,  sin kx ↦ s cos kx
        sys.A(j, 2 * k - 1) = MpComplex(w.re * ra);
        sys.A(j, 2 * k) = MpComplex(w.im * ra);
        sys.B(j, 2 * k - 1) = MpComplex(-(w.im * sa));
        sys.B(j, 2 * k) = MpComplex(w.re * sa);
      }
    }
  }
  return sys;
}

AfmSolver::AfmSolver(AfmSystem sys) : sys_(std::move(sys)), svd_(dno::svd(sys_.A)) {}

std::vector<MpComplex> AfmSolver::afm_coefficients(const SurfaceField& dirichlet) const {
  std::vector<MpComplex> y = b_adjoint_dx(sys_, dirichlet);
  return matvec_adjoint(svd_.V, y);
}

std::vector<MpComplex> AfmSolver::star_coefficients(const SurfaceField& dirichlet) const {
  require(dirichlet.grid().same_as(sys_.grid), "Dirichlet data must live on the AFM grid");
  return matvec_adjoint(svd_.U, as_complex(dirichlet.values()));
}

DenseMatrix AfmSolver::star_basis() const {
  DenseMatrix BV = matmul(sys_.B, svd_.V);
  DenseMatrix P(BV.rows(), BV.cols(), BV.ctx());
  Fourier fourier(sys_.grid.M(), sys_.grid.ctx());
  for (int i = 0; i < BV.cols(); ++i) {
    std::vector<MpComplex> d = spectral_ddx(BV.column(i), fourier);
    for (auto& z : d) z = -z;
    P.set_column(i, d);
  }
  return P;
}

SurfaceField AfmSolver::afm_neumann(const SurfaceField& dirichlet, int cutoff) const {
  std::vector<MpComplex> n = pinv_apply_adjoint(svd_, cutoff, b_adjoint_dx(sys_, dirichlet));
  return SurfaceField::from_values(sys_.grid, real_part(n));
}

SurfaceField AfmSolver::afmstar_neumann(const SurfaceField& dirichlet, int cutoff) const {
  require(dirichlet.grid().same_as(sys_.grid), "Dirichlet data must live on the AFM grid");
  std::vector<MpComplex> c = pinv_apply(svd_, cutoff, as_complex(dirichlet.values()));
  return SurfaceField::from_values(sys_.grid, real_part(minus_ddx_of_B(sys_, c)));
}

CutoffSweep AfmSolver::sweep(const SurfaceField& dirichlet, std::span<const MpReal> exact) const {
  require(static_cast<int>(exact.size()) == sys_.grid.M(), "exact Neumann data has the wrong length");
  PrecisionCtx ctx = sys_.grid.ctx();
  const int M = sys_.grid.M(), r = svd_.rank();
  std::vector<MpComplex> z = afm_coefficients(dirichlet), w = star_coefficients(dirichlet);
  DenseMatrix P = star_basis();

  CutoffSweep out;
  auto run = [&](const DenseMatrix& basis, const std::vector<MpComplex>& coef, std::vector<MpReal>& errs, int& best,
                 std::vector<MpReal>& best_err) {
    std::vector<MpComplex> acc = zeros(M, ctx), best_acc = acc;
    MpReal tmp(ctx);
    MpComplex c(ctx);
    errs.push_back(rms(acc, exact));
    best = 0;
    for (int i = 0; i < r; ++i) {
      c = coef[static_cast<size_t>(i)] / svd_.S[static_cast<size_t>(i)];
      for (int j = 0; j < M; ++j) mp::add_mul(acc[static_cast<size_t>(j)], basis(j, i), c, tmp);
      errs.push_back(rms(acc, exact));
      if (errs.back() < errs[static_cast<size_t>(best)]) {
        best = i + 1;
        best_acc = acc;
      }
    }
    for (int j = 0; j < M; ++j) best_err.push_back(best_acc[static_cast<size_t>(j)].re - exact[static_cast<size_t>(j)]);
  };
  run(svd_.U, z, out.rms_afm, out.best_afm, out.error_afm);
  run(P, w, out.rms_afmstar, out.best_afmstar, out.error_afmstar);
  return out;
}

SurfaceField afm_qr_neumann(const AfmSystem& sys, const SurfaceField& dirichlet, bool star) {
  QrFactorization qr = qr_factor(sys.A);
  if (!star) {
    std::vector<MpComplex> u = lower_solve_adjoint(qr.R, b_adjoint_dx(sys, dirichlet));
    return SurfaceField::from_values(sys.grid, real_part(matvec(qr.Q, u)));
  }
  require(dirichlet.grid().same_as(sys.grid), "Dirichlet data must live on the AFM grid");
  std::vector<MpComplex> c = upper_solve(qr.R, matvec_adjoint(qr.Q, as_complex(dirichlet.values())));
  return SurfaceField::from_values(sys.grid, real_part(minus_ddx_of_B(sys, c)));
}

AfmTransform afm_transform(const AfmSystem& sys, const SurfaceField& field) {
  require(sys.form == AfmForm::real_trig, "the AFM transform needs the real_trig column form");
  require(field.grid().same_as(sys.grid), "field must live on the AFM grid");
  PrecisionCtx ctx = sys.grid.ctx();
  QrFactorization qr = qr_factor(sys.A);
  std::vector<MpComplex> c = matvec_adjoint(qr.Q, as_complex(field.values()));
  MpReal inv_sqrt_m = MpReal(ctx, 1) / sqrt(MpReal(ctx, sys.grid.M()));
  AfmTransform t;
  t.coeffs.push_back(MpComplex(c[0].re * inv_sqrt_m));
  for (int k = 1; k < sys.K / 2; ++k)
    t.coeffs.emplace_back(c[static_cast<size_t>(2 * k - 1)].re * inv_sqrt_m, c[static_cast<size_t>(2 * k)].re * inv_sqrt_m);
  t.rank_warnings = std::move(qr.rank_warnings);
  return t;
}

std::vector<MpComplex> global_relation_residual(const AfmSystem& sys, const SurfaceField& dirichlet,
                                                std::span<const MpReal> neumann) {
  std::vector<MpComplex> lhs = matvec_adjoint(sys.A, as_complex(neumann));
  std::vector<MpComplex> rhs = b_adjoint_dx(sys, dirichlet);
  for (size_t i = 0; i < lhs.size(); ++i) lhs[i] -= rhs[i];
  return lhs;
}

}  // namespace dno
