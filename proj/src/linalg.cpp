#include "dno/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dno/spectral.hpp"

namespace dno {

namespace {

using Column = std::vector<MpComplex>;

void require(bool ok, const std::string& msg) {
  if (!ok) throw DimensionError(msg);
}

MpReal column_norm2(const Column& v, int from = 0) {
  MpReal acc(v[0].ctx());
  for (size_t i = static_cast<size_t>(from); i < v.size(); ++i) mp::add_norm(acc, v[i]);
  return acc;
}

std::vector<Column> to_columns(const DenseMatrix& A) {
  std::vector<Column> cols;
  cols.reserve(static_cast<size_t>(A.cols()));
  for (int j = 0; j < A.cols(); ++j) cols.push_back(A.column(j));
  return cols;
}

DenseMatrix from_columns(const std::vector<Column>& cols, int rows, const PrecisionCtx& ctx) {
  DenseMatrix A(rows, static_cast<int>(cols.size()), ctx);
  for (int j = 0; j < A.cols(); ++j) A.set_column(j, cols[static_cast<size_t>(j)]);
  return A;
}

}  // namespace

// ---------------------------------------------------------------- matrix

DenseMatrix::DenseMatrix(int rows, int cols, const PrecisionCtx& ctx) : rows_(rows), cols_(cols), bits_(ctx.bits()) {
  require(rows >= 0 && cols >= 0, "negative matrix dimension");
  a_ = zeros(rows * cols, ctx);
}

DenseMatrix DenseMatrix::identity(int n, const PrecisionCtx& ctx) {
  DenseMatrix I(n, n, ctx);
  for (int i = 0; i < n; ++i) I(i, i).re = 1L;
  return I;
}

std::vector<MpComplex> DenseMatrix::column(int j) const {
  std::vector<MpComplex> v;
  v.reserve(static_cast<size_t>(rows_));
  for (int i = 0; i < rows_; ++i) v.push_back((*this)(i, j));
  return v;
}

void DenseMatrix::set_column(int j, std::span<const MpComplex> v) {
  require(static_cast<int>(v.size()) == rows_, "column length mismatch");
  for (int i = 0; i < rows_; ++i) (*this)(i, j) = v[static_cast<size_t>(i)];
}

DenseMatrix DenseMatrix::adjoint() const {
  DenseMatrix T(cols_, rows_, ctx());
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) T(j, i) = conj((*this)(i, j));
  return T;
}

MpReal DenseMatrix::frobenius_norm() const {
  MpReal acc(ctx());
  for (const auto& z : a_) mp::add_norm(acc, z);
  return sqrt(acc);
}

MpReal DenseMatrix::max_abs() const {
  MpReal m(ctx());
  for (const auto& z : a_) m = max(m, abs(z));
  return m;
}

// ---------------------------------------------------------------- products

namespace {

void matmul_row(const DenseMatrix& A, const DenseMatrix& B, DenseMatrix& C, int i, MpReal& tmp) {
  for (int j = 0; j < B.cols(); ++j) {
    MpComplex& c = C(i, j);
    for (int k = 0; k < A.cols(); ++k) mp::add_mul(c, A(i, k), B(k, j), tmp);
  }
}

}  // namespace

DenseMatrix matmul(const DenseMatrix& A, const DenseMatrix& B) {
  require(A.cols() == B.rows(), "matmul inner dimensions differ");
  PrecisionCtx ctx(std::max(A.ctx().bits(), B.ctx().bits()));
  DenseMatrix C(A.rows(), B.cols(), ctx);
#pragma omp parallel
  {
    MpReal tmp(ctx);
#pragma omp for schedule(dynamic, 1)
    for (int i = 0; i < A.rows(); ++i) matmul_row(A, B, C, i, tmp);
  }
  return C;
}

DenseMatrix matmul_serial(const DenseMatrix& A, const DenseMatrix& B) {
  require(A.cols() == B.rows(), "matmul inner dimensions differ");
  PrecisionCtx ctx(std::max(A.ctx().bits(), B.ctx().bits()));
  DenseMatrix C(A.rows(), B.cols(), ctx);
  MpReal tmp(ctx);
  for (int i = 0; i < A.rows(); ++i) matmul_row(A, B, C, i, tmp);
  return C;
}

std::vector<MpComplex> matvec(const DenseMatrix& A, std::span<const MpComplex> x) {
  require(static_cast<int>(x.size()) == A.cols(), "matvec dimension mismatch");
  std::vector<MpComplex> y = zeros(A.rows(), A.ctx());
  MpReal tmp(A.ctx());
  for (int i = 0; i < A.rows(); ++i)
    for (int k = 0; k < A.cols(); ++k) mp::add_mul(y[static_cast<size_t>(i)], A(i, k), x[static_cast<size_t>(k)], tmp);
  return y;
}

std::vector<MpComplex> matvec_adjoint(const DenseMatrix& A, std::span<const MpComplex> x) {
  require(static_cast<int>(x.size()) == A.rows(), "matvec dimension mismatch");
  std::vector<MpComplex> y = zeros(A.cols(), A.ctx());
  MpReal tmp(A.ctx());
  for (int i = 0; i < A.rows(); ++i)
    for (int k = 0; k < A.cols(); ++k)
      mp::add_conj_mul(y[static_cast<size_t>(k)], A(i, k), x[static_cast<size_t>(i)], tmp);
  return y;
}

// ---------------------------------------------------------------- LU

LuFactorization::LuFactorization(DenseMatrix A) : lu_(std::move(A)) {
  require(lu_.rows() == lu_.cols(), "LU needs a square matrix");
  const int n = lu_.rows();
  PrecisionCtx ctx = lu_.ctx();
  perm_.resize(static_cast<size_t>(n));
  std::iota(perm_.begin(), perm_.end(), 0);
  MpReal best(ctx), cand(ctx);
  for (int k = 0; k < n; ++k) {
    int p = k;
    best = norm(lu_(k, k));
    for (int i = k + 1; i < n; ++i) {
      cand = norm(lu_(i, k));
      if (cand > best) {
        best = cand;
        p = i;
      }
    }
    if (best.is_zero()) throw SingularMatrixError(k, "zero pivot in column " + std::to_string(k));
    if (p != k) {
      for (int j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
      std::swap(perm_[static_cast<size_t>(k)], perm_[static_cast<size_t>(p)]);
    }
    MpComplex inv_pivot = MpComplex(ctx, 1.0) / lu_(k, k);
#pragma omp parallel
    {
      MpReal tmp(ctx);
      MpComplex ml(ctx);
#pragma omp for schedule(static)
      for (int i = k + 1; i < n; ++i) {
        mp::mul(lu_(i, k), lu_(i, k), inv_pivot, tmp);
        ml = -lu_(i, k);
        for (int j = k + 1; j < n; ++j) mp::add_mul(lu_(i, j), ml, lu_(k, j), tmp);
      }
    }
  }
}

std::vector<MpComplex> LuFactorization::solve(std::span<const MpComplex> b) const {
  const int n = size();
  require(static_cast<int>(b.size()) == n, "right-hand side length mismatch");
  PrecisionCtx ctx = lu_.ctx();
  std::vector<MpComplex> x;
  x.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) x.emplace_back(MpReal(ctx, b[static_cast<size_t>(perm_[static_cast<size_t>(i)])].re),
                                             MpReal(ctx, b[static_cast<size_t>(perm_[static_cast<size_t>(i)])].im));
  MpReal tmp(ctx);
  MpComplex ml(ctx);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) {
      ml = -lu_(i, j);
      mp::add_mul(x[static_cast<size_t>(i)], ml, x[static_cast<size_t>(j)], tmp);
    }
  for (int i = n - 1; i >= 0; --i) {
    for (int j = i + 1; j < n; ++j) {
      ml = -lu_(i, j);
      mp::add_mul(x[static_cast<size_t>(i)], ml, x[static_cast<size_t>(j)], tmp);
    }
    x[static_cast<size_t>(i)] = x[static_cast<size_t>(i)] / lu_(i, i);
  }
  return x;
}

std::vector<MpComplex> LuFactorization::solve_adjoint(std::span<const MpComplex> b) const {
  const int n = size();
  require(static_cast<int>(b.size()) == n, "right-hand side length mismatch");
  PrecisionCtx ctx = lu_.ctx();
  std::vector<MpComplex> y(b.begin(), b.end());
  MpReal tmp(ctx);
  MpComplex ml(ctx);
  // U* y = b (lower triangular)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      ml = -conj(lu_(j, i));
      mp::add_mul(y[static_cast<size_t>(i)], ml, y[static_cast<size_t>(j)], tmp);
    }
    y[static_cast<size_t>(i)] = y[static_cast<size_t>(i)] / conj(lu_(i, i));
  }
  // L* w = y (unit upper triangular)
  for (int i = n - 1; i >= 0; --i)
    for (int j = i + 1; j < n; ++j) {
      ml = -conj(lu_(j, i));
      mp::add_mul(y[static_cast<size_t>(i)], ml, y[static_cast<size_t>(j)], tmp);
    }
  std::vector<MpComplex> x = zeros(n, ctx);
  for (int i = 0; i < n; ++i) x[static_cast<size_t>(perm_[static_cast<size_t>(i)])] = y[static_cast<size_t>(i)];
  return x;
}

MpReal LuFactorization::inverse_norm1_estimate() const {
  const int n = size();
  PrecisionCtx ctx = lu_.ctx();
  std::vector<MpComplex> x;
  for (int i = 0; i < n; ++i) x.emplace_back(MpReal(ctx, 1) / static_cast<long>(n), MpReal(ctx));
  MpReal estimate(ctx);
  int last_j = -1;
  for (int iter = 0; iter < 5; ++iter) {
    std::vector<MpComplex> y = solve(x);
    MpReal y1(ctx);
    for (const auto& z : y) y1 += abs(z);
    if (iter > 0 && y1 <= estimate) break;
    estimate = y1;
    std::vector<MpComplex> xi;
    for (const auto& z : y) {
      MpReal a = abs(z);
      if (a.is_zero())
        xi.emplace_back(ctx, 1.0);
      else
        xi.push_back(z / a);
    }
    std::vector<MpComplex> w = solve_adjoint(xi);
    int j = 0;
    MpReal zmax(ctx);
    for (int i = 0; i < n; ++i) {
      MpReal a = abs(w[static_cast<size_t>(i)]);
      if (a > zmax) {
        zmax = a;
        j = i;
      }
    }
    if (j == last_j) break;
    last_j = j;
    for (auto& z : x) mp::set_zero(z);
    x[static_cast<size_t>(j)].re = 1L;
  }
  return estimate;
}

std::vector<MpComplex> lu_solve(const DenseMatrix& A, std::span<const MpComplex> b) {
  return LuFactorization(A).solve(b);
}

MpReal norm1(const DenseMatrix& A) {
  MpReal best(A.ctx());
  for (int j = 0; j < A.cols(); ++j) {
    MpReal s(A.ctx());
    for (int i = 0; i < A.rows(); ++i) s += abs(A(i, j));
    best = max(best, s);
  }
  return best;
}

// ---------------------------------------------------------------- Householder

namespace {

struct Reflector {
  Column v;  // acts on rows k..m-1, stored from index 0
  MpReal tau;  // 2 / v*v, zero for the identity
};

/// Reduces cols[k] below the diagonal; returns the reflector and writes R_kk.
Reflector householder(Column& x, int k, const PrecisionCtx& ctx) {
  const int m = static_cast<int>(x.size());
  Reflector h{Column(x.begin() + k, x.end()), MpReal(ctx)};
  MpReal nx = sqrt(column_norm2(x, k));
  if (nx.is_zero()) return h;
  MpReal a0 = abs(x[static_cast<size_t>(k)]);
  MpComplex phase = a0.is_zero() ? MpComplex(ctx, 1.0) : x[static_cast<size_t>(k)] / a0;
  MpComplex alpha = -(phase * nx);
  h.v[0] -= alpha;
  h.tau = MpReal(ctx, 2) / column_norm2(h.v);
  x[static_cast<size_t>(k)] = alpha;
  for (int i = k + 1; i < m; ++i) mp::set_zero(x[static_cast<size_t>(i)]);
  return h;
}

void apply_reflector(const Reflector& h, Column& y, int k, MpReal& tmp, MpComplex& w) {
  if (h.tau.is_zero()) return;
  mp::set_zero(w);
  const size_t len = h.v.size();
  for (size_t i = 0; i < len; ++i) mp::add_conj_mul(w, h.v[i], y[k + i], tmp);
  mp::mul(w, w, h.tau);
  w = -w;
  for (size_t i = 0; i < len; ++i) mp::add_mul(y[k + i], h.v[i], w, tmp);
}

struct HouseholderQr {
  std::vector<Column> cols;  // R in the upper triangle
  std::vector<Reflector> reflectors;
  std::vector<int> perm;
};

HouseholderQr householder_qr(std::vector<Column> cols, bool pivot, const PrecisionCtx& ctx) {
  const int n = static_cast<int>(cols.size());
  HouseholderQr out;
  out.perm.resize(static_cast<size_t>(n));
  std::iota(out.perm.begin(), out.perm.end(), 0);
  for (int k = 0; k < n; ++k) {
    if (pivot) {
      int p = k;
      MpReal best = column_norm2(cols[static_cast<size_t>(k)], k);
      for (int j = k + 1; j < n; ++j) {
        MpReal c = column_norm2(cols[static_cast<size_t>(j)], k);
        if (c > best) {
          best = std::move(c);
          p = j;
        }
      }
      if (p != k) {
        std::swap(cols[static_cast<size_t>(k)], cols[static_cast<size_t>(p)]);
        std::swap(out.perm[static_cast<size_t>(k)], out.perm[static_cast<size_t>(p)]);
      }
    }
    Reflector h = householder(cols[static_cast<size_t>(k)], k, ctx);
#pragma omp parallel
    {
      MpReal t(ctx);
      MpComplex ww(ctx);
#pragma omp for schedule(static)
      for (int j = k + 1; j < n; ++j) apply_reflector(h, cols[static_cast<size_t>(j)], k, t, ww);
    }
    out.reflectors.push_back(std::move(h));
  }
  out.cols = std::move(cols);
  return out;
}

/// Y ← H_0 H_1 ... H_{n-1} Y for each column of Y.
void apply_q(const std::vector<Reflector>& refl, std::vector<Column>& Y, const PrecisionCtx& ctx) {
  const int n = static_cast<int>(Y.size());
#pragma omp parallel
  {
    MpReal t(ctx);
    MpComplex w(ctx);
#pragma omp for schedule(static)
    for (int j = 0; j < n; ++j)
      for (int k = static_cast<int>(refl.size()) - 1; k >= 0; --k)
        apply_reflector(refl[static_cast<size_t>(k)], Y[static_cast<size_t>(j)], k, t, w);
  }
}

}  // namespace

QrFactorization qr_factor(const DenseMatrix& A) {
  const int m = A.rows(), n = A.cols();
  require(n <= m, "QR needs cols <= rows");
  PrecisionCtx ctx = A.ctx();
  HouseholderQr h = householder_qr(to_columns(A), false, ctx);
  DenseMatrix R(n, n, ctx);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) R(i, j) = h.cols[static_cast<size_t>(j)][static_cast<size_t>(i)];
  std::vector<Column> Y;
  for (int j = 0; j < n; ++j) {
    Column e = zeros(m, ctx);
    e[static_cast<size_t>(j)].re = 1L;
    Y.push_back(std::move(e));
  }
  apply_q(h.reflectors, Y, ctx);
  // Rotate phases so the diagonal of R is real and nonnegative.
  for (int k = 0; k < n; ++k) {
    MpReal a = abs(R(k, k));
    if (a.is_zero()) continue;
    MpComplex ph = R(k, k) / a;
    MpComplex cph = conj(ph);
    for (int j = k; j < n; ++j) R(k, j) = R(k, j) * cph;
    mpfr_set_zero(R(k, k).im.raw(), 1);
    R(k, k).re = a;
    for (auto& z : Y[static_cast<size_t>(k)]) z = z * ph;
  }
  QrFactorization out{from_columns(Y, m, ctx), std::move(R), {}};
  MpReal threshold = ldexp(A.frobenius_norm(), -(ctx.bits() - 8)) * static_cast<long>(std::max(n, 1));
  for (int k = 0; k < n; ++k)
    if (out.R(k, k).re <= threshold) out.rank_warnings.push_back(k);
  return out;
}

// ---------------------------------------------------------------- SVD

namespace {

struct JacobiState {
  MpReal alpha, beta, abs_gamma, zeta, t, c, s, tmp, tol2;
  MpComplex gamma, phase, z;
  explicit JacobiState(const PrecisionCtx& ctx)
      : alpha(ctx), beta(ctx), abs_gamma(ctx), zeta(ctx), t(ctx), c(ctx), s(ctx), tmp(ctx), tol2(ctx),
        gamma(ctx), phase(ctx), z(ctx) {}
};

/// [p, q] ← [c p - s e^{-iθ} q, s p + c e^{-iθ} q]
void rotate(Column& p, Column& q, JacobiState& st) {
  const size_t n = p.size();
  for (size_t i = 0; i < n; ++i) {
    mp::mul(st.z, q[i], st.phase, st.tmp);
    mpfr_fmma(q[i].re.raw(), st.s.raw(), p[i].re.raw(), st.c.raw(), st.z.re.raw(), MPFR_RNDN);
    mpfr_fmma(q[i].im.raw(), st.s.raw(), p[i].im.raw(), st.c.raw(), st.z.im.raw(), MPFR_RNDN);
    mpfr_fmms(p[i].re.raw(), st.c.raw(), p[i].re.raw(), st.s.raw(), st.z.re.raw(), MPFR_RNDN);
    mpfr_fmms(p[i].im.raw(), st.c.raw(), p[i].im.raw(), st.s.raw(), st.z.im.raw(), MPFR_RNDN);
  }
}

/// One-sided Jacobi on the columns of X, accumulating the rotations in W.
int jacobi_sweeps(std::vector<Column>& X, std::vector<Column>& W, const PrecisionCtx& ctx) {
  const int n = static_cast<int>(X.size());
  JacobiState st(ctx);
  const MpReal tol = ldexp(MpReal(ctx, 1), -(ctx.bits() - 4)) * sqrt(MpReal(ctx, std::max(n, 1)));
  st.tol2 = tol * tol;
  MpReal lhs(ctx), rhs(ctx), worst(ctx);
  for (int sweep = 1; sweep <= 30; ++sweep) {
    bool rotated = false;
    worst = 0L;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        Column& xp = X[static_cast<size_t>(p)];
        Column& xq = X[static_cast<size_t>(q)];
        st.alpha = 0L;
        st.beta = 0L;
        mp::set_zero(st.gamma);
        for (size_t i = 0; i < xp.size(); ++i) {
          mp::add_norm(st.alpha, xp[i]);
          mp::add_norm(st.beta, xq[i]);
          mp::add_conj_mul(st.gamma, xp[i], xq[i], st.tmp);
        }
        if (st.alpha.is_zero() || st.beta.is_zero()) continue;
        // |γ|² > tol² αβ ?
        lhs = norm(st.gamma);
        rhs = st.alpha * st.beta;
        if (lhs <= st.tol2 * rhs) continue;
        worst = max(worst, lhs / rhs);
        rotated = true;
        st.abs_gamma = sqrt(lhs);
        st.phase = conj(st.gamma) / st.abs_gamma;
        st.zeta = (st.beta - st.alpha) / ldexp(st.abs_gamma, 1);
        st.t = MpReal(ctx, 1) / (abs(st.zeta) + sqrt(st.zeta * st.zeta + 1L));
        if (st.zeta.sign() < 0) st.t = -st.t;
        st.c = MpReal(ctx, 1) / sqrt(st.t * st.t + 1L);
        st.s = st.c * st.t;
        rotate(xp, xq, st);
        rotate(W[static_cast<size_t>(p)], W[static_cast<size_t>(q)], st);
      }
    }
    if (!rotated) return sweep;
  }
  throw ConvergenceError(std::sqrt(worst.to_double()), "Jacobi SVD did not converge in 30 sweeps");
}

}  // namespace

SvdFactorization svd(const DenseMatrix& A) {
  const int m = A.rows(), n = A.cols();
  require(n <= m, "SVD needs cols <= rows");
  PrecisionCtx ctx = A.ctx();
  HouseholderQr qr = householder_qr(to_columns(A), true, ctx);
  // X = R*, columns x_i = conj(row i of R)
  std::vector<Column> X, W;
  for (int i = 0; i < n; ++i) {
    Column x = zeros(n, ctx);
    for (int l = i; l < n; ++l) x[static_cast<size_t>(l)] = conj(qr.cols[static_cast<size_t>(l)][static_cast<size_t>(i)]);
    X.push_back(std::move(x));
    Column w = zeros(n, ctx);
    w[static_cast<size_t>(i)].re = 1L;
    W.push_back(std::move(w));
  }
  qr.cols.clear();
  int sweeps = jacobi_sweeps(X, W, ctx);
  // X W = U_x Σ  =>  A = (Q W) Σ (P U_x)*
  std::vector<MpReal> sigma;
  for (int i = 0; i < n; ++i) sigma.push_back(sqrt(column_norm2(X[static_cast<size_t>(i)])));
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return sigma[static_cast<size_t>(a)] > sigma[static_cast<size_t>(b)]; });
  std::vector<Column> Ucols, Vcols;
  std::vector<MpReal> S;
  for (int idx : order) {
    Column u = zeros(m, ctx);
    for (int l = 0; l < n; ++l) u[static_cast<size_t>(l)] = W[static_cast<size_t>(idx)][static_cast<size_t>(l)];
    Ucols.push_back(std::move(u));
    Column v = zeros(n, ctx);
    const MpReal& s = sigma[static_cast<size_t>(idx)];
    for (int l = 0; l < n; ++l) {
      if (!s.is_zero()) v[static_cast<size_t>(qr.perm[static_cast<size_t>(l)])] = X[static_cast<size_t>(idx)][static_cast<size_t>(l)] / s;
    }
    Vcols.push_back(std::move(v));
    S.push_back(s);
  }
  apply_q(qr.reflectors, Ucols, ctx);
  for (int i = 0; i < n; ++i) {
    Column& u = Ucols[static_cast<size_t>(i)];
    int best = 0;
    MpReal bmag = norm(u[0]);
    for (int l = 1; l < m; ++l) {
      MpReal c = norm(u[static_cast<size_t>(l)]);
      if (c > bmag) {
        bmag = std::move(c);
        best = l;
      }
    }
    if (bmag.is_zero()) continue;
    MpComplex ph = conj(u[static_cast<size_t>(best)]) / sqrt(bmag);
    MpReal tmp(ctx);
    for (auto& z : u) mp::mul(z, z, ph, tmp);
    mpfr_set_zero(u[static_cast<size_t>(best)].im.raw(), 1);
    for (auto& z : Vcols[static_cast<size_t>(i)]) mp::mul(z, z, ph, tmp);
  }
  return SvdFactorization{from_columns(Ucols, m, ctx), std::move(S), from_columns(Vcols, n, ctx), sweeps};
}

std::vector<MpComplex> pinv_apply(const SvdFactorization& F, int cutoff, std::span<const MpComplex> y) {
  require(cutoff >= 0 && cutoff <= F.rank(), "pseudo-inverse cutoff out of range");
  require(static_cast<int>(y.size()) == F.U.rows(), "pseudo-inverse operand length mismatch");
  PrecisionCtx ctx = F.U.ctx();
  std::vector<MpComplex> x = zeros(F.V.rows(), ctx);
  MpReal tmp(ctx);
  MpComplex c(ctx);
  for (int i = 0; i < cutoff; ++i) {
    mp::set_zero(c);
    for (int l = 0; l < F.U.rows(); ++l) mp::add_conj_mul(c, F.U(l, i), y[static_cast<size_t>(l)], tmp);
    c /= F.S[static_cast<size_t>(i)];
    for (int l = 0; l < F.V.rows(); ++l) mp::add_mul(x[static_cast<size_t>(l)], F.V(l, i), c, tmp);
  }
  return x;
}

std::vector<MpComplex> pinv_apply_adjoint(const SvdFactorization& F, int cutoff, std::span<const MpComplex> y) {
  require(cutoff >= 0 && cutoff <= F.rank(), "pseudo-inverse cutoff out of range");
  require(static_cast<int>(y.size()) == F.V.rows(), "pseudo-inverse operand length mismatch");
  PrecisionCtx ctx = F.U.ctx();
  std::vector<MpComplex> x = zeros(F.U.rows(), ctx);
  MpReal tmp(ctx);
  MpComplex c(ctx);
  for (int i = 0; i < cutoff; ++i) {
    mp::set_zero(c);
    for (int l = 0; l < F.V.rows(); ++l) mp::add_conj_mul(c, F.V(l, i), y[static_cast<size_t>(l)], tmp);
    c /= F.S[static_cast<size_t>(i)];
    for (int l = 0; l < F.U.rows(); ++l) mp::add_mul(x[static_cast<size_t>(l)], F.U(l, i), c, tmp);
  }
  return x;
}

// ---------------------------------------------------------------- GMRES

GmresResult gmres(const std::function<std::vector<MpComplex>(std::span<const MpComplex>)>& op,
                  std::span<const MpComplex> b, const MpReal& tol, int restart, int max_iterations) {
  const int n = static_cast<int>(b.size());
  PrecisionCtx ctx = b[0].ctx();
  GmresResult res{zeros(n, ctx), 0, false, MpReal(ctx)};
  MpReal tmp(ctx);
  auto nrm = [&](const std::vector<MpComplex>& v) {
    MpReal a(ctx);
    for (const auto& z : v) mp::add_norm(a, z);
    return sqrt(a);
  };
  std::vector<MpComplex> bb(b.begin(), b.end());
  MpReal bnorm = nrm(bb);
  if (bnorm.is_zero()) {
    res.converged = true;
    return res;
  }
  std::vector<MpComplex> r = bb;
  while (res.iterations < max_iterations) {
    MpReal beta = nrm(r);
    res.relative_residual = beta / bnorm;
    if (res.relative_residual <= tol) {
      res.converged = true;
      return res;
    }
    std::vector<std::vector<MpComplex>> V;
    V.push_back(r);
    for (auto& z : V[0]) z /= beta;
    std::vector<std::vector<MpComplex>> H;
    std::vector<MpReal> cs;
    std::vector<MpComplex> sn;
    std::vector<MpComplex> g = zeros(restart + 1, ctx);
    g[0].re = beta;
    int j = 0;
    for (; j < restart && res.iterations < max_iterations; ++j) {
      ++res.iterations;
      std::vector<MpComplex> w = op(V[static_cast<size_t>(j)]);
      std::vector<MpComplex> h = zeros(j + 2, ctx);
      for (int i = 0; i <= j; ++i) {
        for (int l = 0; l < n; ++l) mp::add_conj_mul(h[static_cast<size_t>(i)], V[static_cast<size_t>(i)][static_cast<size_t>(l)], w[static_cast<size_t>(l)], tmp);
        MpComplex mh = -h[static_cast<size_t>(i)];
        for (int l = 0; l < n; ++l) mp::add_mul(w[static_cast<size_t>(l)], V[static_cast<size_t>(i)][static_cast<size_t>(l)], mh, tmp);
      }
      MpReal wn = nrm(w);
      h[static_cast<size_t>(j + 1)].re = wn;
      for (int i = 0; i < j; ++i) {
        MpComplex a = h[static_cast<size_t>(i)], c2 = h[static_cast<size_t>(i + 1)];
        h[static_cast<size_t>(i)] = a * cs[static_cast<size_t>(i)] + sn[static_cast<size_t>(i)] * c2;
        h[static_cast<size_t>(i + 1)] = c2 * cs[static_cast<size_t>(i)] - conj(sn[static_cast<size_t>(i)]) * a;
      }
      MpComplex a = h[static_cast<size_t>(j)];
      MpReal aa = abs(a);
      MpReal rr = sqrt(norm(a) + wn * wn);
      MpReal c(ctx);
      MpComplex s(ctx);
      if (aa.is_zero()) {
        s.re = 1L;
        h[static_cast<size_t>(j)] = MpComplex(wn);
      } else {
        c = aa / rr;
        MpComplex ph = a / aa;
        s = ph * (wn / rr);
        h[static_cast<size_t>(j)] = ph * rr;
      }
      mp::set_zero(h[static_cast<size_t>(j + 1)]);
      cs.push_back(c);
      sn.push_back(s);
      MpComplex gj = g[static_cast<size_t>(j)];
      g[static_cast<size_t>(j)] = gj * c;
      g[static_cast<size_t>(j + 1)] = -(conj(s) * gj);
      H.push_back(std::move(h));
      res.relative_residual = abs(g[static_cast<size_t>(j + 1)]) / bnorm;
      if (wn.is_zero() || res.relative_residual <= tol) {
        ++j;
        break;
      }
      V.push_back(std::move(w));
      for (auto& z : V.back()) z /= wn;
    }
    // back substitution on the j×j triangle
    std::vector<MpComplex> y = zeros(j, ctx);
    for (int i = j - 1; i >= 0; --i) {
      MpComplex acc = g[static_cast<size_t>(i)];
      for (int l = i + 1; l < j; ++l) acc -= H[static_cast<size_t>(l)][static_cast<size_t>(i)] * y[static_cast<size_t>(l)];
      y[static_cast<size_t>(i)] = acc / H[static_cast<size_t>(i)][static_cast<size_t>(i)];
    }
    for (int i = 0; i < j; ++i)
      for (int l = 0; l < n; ++l) mp::add_mul(res.x[static_cast<size_t>(l)], V[static_cast<size_t>(i)][static_cast<size_t>(l)], y[static_cast<size_t>(i)], tmp);
    std::vector<MpComplex> ax = op(res.x);
    for (int l = 0; l < n; ++l) r[static_cast<size_t>(l)] = bb[static_cast<size_t>(l)] - ax[static_cast<size_t>(l)];
  }
  MpReal beta = nrm(r);
  res.relative_residual = beta / bnorm;
  res.converged = res.relative_residual <= tol;
  return res;
}

}  // namespace dno
