#include "dno/mpnum.hpp"

#include <cmath>
#include <regex>
#include <stdexcept>
#include <utility>

namespace dno {

namespace {

constexpr mpfr_rnd_t kRnd = MPFR_RNDN;

mpfr_prec_t max_prec(const MpReal& a, const MpReal& b) {
  return std::max(mpfr_get_prec(a.raw()), mpfr_get_prec(b.raw()));
}

PrecisionCtx ctx_of(mpfr_prec_t p) { return PrecisionCtx(static_cast<int>(p)); }

template <typename F>
MpReal unary(const MpReal& a, F f) {
  MpReal r(a.ctx());
  f(r.raw(), a.raw(), kRnd);
  return r;
}

}  // namespace

PrecisionCtx::PrecisionCtx(int bits) : bits_(bits) {
  if (bits < 24) throw std::invalid_argument("precision must be at least 24 bits, got " + std::to_string(bits));
  if (bits > (1 << 24)) throw std::invalid_argument("precision too large");
}

int PrecisionCtx::digits10() const noexcept {
  return static_cast<int>(std::ceil(bits_ * std::log10(2.0))) + 2;
}

double PrecisionCtx::epsilon() const noexcept { return std::ldexp(1.0, -bits_); }

PrecisionCtx ctx_create(int bits) { return PrecisionCtx(bits); }

MpReal::MpReal(const PrecisionCtx& ctx) {
  mpfr_init2(x_, ctx.bits());
  mpfr_set_zero(x_, 1);
}

MpReal::MpReal(const PrecisionCtx& ctx, double v) : MpReal(ctx) {
  if (!std::isfinite(v)) throw std::invalid_argument("non-finite double");
  mpfr_set_d(x_, v, kRnd);
}

MpReal::MpReal(const PrecisionCtx& ctx, const MpReal& other) : MpReal(ctx) { mpfr_set(x_, other.x_, kRnd); }

MpReal::MpReal(const MpReal& other) {
  mpfr_init2(x_, mpfr_get_prec(other.x_));
  mpfr_set(x_, other.x_, kRnd);
}

MpReal::MpReal(MpReal&& other) noexcept {
  x_[0] = other.x_[0];
  other.x_->_mpfr_d = nullptr;
}

MpReal& MpReal::operator=(const MpReal& other) {
  if (this == &other) return *this;
  if (x_->_mpfr_d == nullptr) mpfr_init2(x_, mpfr_get_prec(other.x_));
  mpfr_set(x_, other.x_, kRnd);
  return *this;
}

MpReal& MpReal::operator=(MpReal&& other) noexcept {
  if (this == &other) return *this;
  if (x_->_mpfr_d == nullptr) {
    x_[0] = other.x_[0];
    other.x_->_mpfr_d = nullptr;
  } else if (mpfr_get_prec(x_) == mpfr_get_prec(other.x_)) {
    mpfr_swap(x_, other.x_);
  } else {
    mpfr_set(x_, other.x_, kRnd);
  }
  return *this;
}

MpReal& MpReal::operator=(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("non-finite double");
  mpfr_set_d(x_, v, kRnd);
  return *this;
}

MpReal& MpReal::operator=(long v) {
  mpfr_set_si(x_, v, kRnd);
  return *this;
}

MpReal::~MpReal() {
  if (x_->_mpfr_d != nullptr) mpfr_clear(x_);
}

MpReal MpReal::parse(const PrecisionCtx& ctx, std::string_view text) {
  static const std::regex grammar(R"(^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$)");
  std::string s(text);
  if (!std::regex_match(s, grammar)) throw std::invalid_argument("malformed decimal scalar: '" + s + "'");
  MpReal r(ctx);
  char* end = nullptr;
  mpfr_strtofr(r.x_, s.c_str(), &end, 10, kRnd);
  if (end == nullptr || *end != '\0' || !r.is_finite())
    throw std::invalid_argument("malformed decimal scalar: '" + s + "'");
  return r;
}

std::string MpReal::to_string() const { return to_string(ctx().digits10()); }

std::string MpReal::to_string(int significant_digits) const {
  if (significant_digits < 1) significant_digits = 1;
  char* buf = nullptr;
  mpfr_asprintf(&buf, "%.*Re", significant_digits - 1, x_);
  std::string s(buf);
  mpfr_free_str(buf);
  return s;
}

MpReal& MpReal::operator+=(const MpReal& o) {
  mpfr_add(x_, x_, o.x_, kRnd);
  return *this;
}
MpReal& MpReal::operator-=(const MpReal& o) {
  mpfr_sub(x_, x_, o.x_, kRnd);
  return *this;
}
MpReal& MpReal::operator*=(const MpReal& o) {
  mpfr_mul(x_, x_, o.x_, kRnd);
  return *this;
}
MpReal& MpReal::operator/=(const MpReal& o) {
  mpfr_div(x_, x_, o.x_, kRnd);
  return *this;
}
MpReal& MpReal::operator*=(long v) {
  mpfr_mul_si(x_, x_, v, kRnd);
  return *this;
}
MpReal& MpReal::operator/=(long v) {
  mpfr_div_si(x_, x_, v, kRnd);
  return *this;
}
MpReal MpReal::operator-() const {
  MpReal r(*this);
  mpfr_neg(r.x_, r.x_, kRnd);
  return r;
}

#define DNO_BINOP(op, fn)                                  \
  MpReal operator op(const MpReal& a, const MpReal& b) {   \
    MpReal r(ctx_of(max_prec(a, b)));                      \
    fn(r.raw(), a.raw(), b.raw(), kRnd);                   \
    return r;                                              \
  }
DNO_BINOP(+, mpfr_add)
DNO_BINOP(-, mpfr_sub)
DNO_BINOP(*, mpfr_mul)
DNO_BINOP(/, mpfr_div)
#undef DNO_BINOP

MpReal operator+(const MpReal& a, long b) {
  MpReal r(a.ctx());
  mpfr_add_si(r.raw(), a.raw(), b, kRnd);
  return r;
}
MpReal operator+(long a, const MpReal& b) { return b + a; }
MpReal operator-(const MpReal& a, long b) {
  MpReal r(a.ctx());
  mpfr_sub_si(r.raw(), a.raw(), b, kRnd);
  return r;
}
MpReal operator-(long a, const MpReal& b) {
  MpReal r(b.ctx());
  mpfr_si_sub(r.raw(), a, b.raw(), kRnd);
  return r;
}
MpReal operator*(const MpReal& a, long b) {
  MpReal r(a.ctx());
  mpfr_mul_si(r.raw(), a.raw(), b, kRnd);
  return r;
}
MpReal operator*(long a, const MpReal& b) { return b * a; }
MpReal operator/(const MpReal& a, long b) {
  MpReal r(a.ctx());
  mpfr_div_si(r.raw(), a.raw(), b, kRnd);
  return r;
}
MpReal operator/(long a, const MpReal& b) {
  MpReal r(b.ctx());
  mpfr_si_div(r.raw(), a, b.raw(), kRnd);
  return r;
}

std::strong_ordering operator<=>(const MpReal& a, const MpReal& b) {
  int c = mpfr_cmp(a.raw(), b.raw());
  return c < 0 ? std::strong_ordering::less : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
}
bool operator==(const MpReal& a, const MpReal& b) { return mpfr_equal_p(a.raw(), b.raw()) != 0; }
std::strong_ordering operator<=>(const MpReal& a, long b) {
  int c = mpfr_cmp_si(a.raw(), b);
  return c < 0 ? std::strong_ordering::less : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
}
bool operator==(const MpReal& a, long b) { return mpfr_cmp_si(a.raw(), b) == 0; }
std::partial_ordering operator<=>(const MpReal& a, double b) {
  if (std::isnan(b) || mpfr_nan_p(a.raw())) return std::partial_ordering::unordered;
  int c = mpfr_cmp_d(a.raw(), b);
  return c < 0 ? std::partial_ordering::less : c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent;
}
bool operator==(const MpReal& a, double b) { return !std::isnan(b) && mpfr_cmp_d(a.raw(), b) == 0; }

MpReal abs(const MpReal& a) { return unary(a, mpfr_abs); }
MpReal sqrt(const MpReal& a) { return unary(a, mpfr_sqrt); }
MpReal exp(const MpReal& a) { return unary(a, mpfr_exp); }
MpReal expm1(const MpReal& a) { return unary(a, mpfr_expm1); }
MpReal log(const MpReal& a) { return unary(a, mpfr_log); }
MpReal log10(const MpReal& a) { return unary(a, mpfr_log10); }
MpReal sin(const MpReal& a) { return unary(a, mpfr_sin); }
MpReal cos(const MpReal& a) { return unary(a, mpfr_cos); }
MpReal tan(const MpReal& a) { return unary(a, mpfr_tan); }
MpReal sinh(const MpReal& a) { return unary(a, mpfr_sinh); }
MpReal cosh(const MpReal& a) { return unary(a, mpfr_cosh); }
MpReal tanh(const MpReal& a) { return unary(a, mpfr_tanh); }
MpReal atan(const MpReal& a) { return unary(a, mpfr_atan); }

MpReal atan2(const MpReal& y, const MpReal& x) {
  MpReal r(ctx_of(max_prec(y, x)));
  mpfr_atan2(r.raw(), y.raw(), x.raw(), kRnd);
  return r;
}

MpReal pow(const MpReal& a, const MpReal& b) {
  MpReal r(ctx_of(max_prec(a, b)));
  mpfr_pow(r.raw(), a.raw(), b.raw(), kRnd);
  return r;
}

MpReal pow(const MpReal& a, long n) {
  MpReal r(a.ctx());
  mpfr_pow_si(r.raw(), a.raw(), n, kRnd);
  return r;
}

MpReal ldexp(const MpReal& a, long e) {
  MpReal r(a.ctx());
  mpfr_mul_2si(r.raw(), a.raw(), e, kRnd);
  return r;
}

MpReal max(const MpReal& a, const MpReal& b) { return a < b ? b : a; }
MpReal min(const MpReal& a, const MpReal& b) { return b < a ? b : a; }

MpReal pi(const PrecisionCtx& ctx) {
  MpReal r(ctx);
  mpfr_const_pi(r.raw(), kRnd);
  return r;
}

double log10_abs(const MpReal& a) {
  if (a.is_zero()) return -INFINITY;
  long e = 0;
  double m = mpfr_get_d_2exp(&e, a.raw(), kRnd);
  return std::log10(std::fabs(m)) + static_cast<double>(e) * std::log10(2.0);
}

// ---------------------------------------------------------------- complex

std::string MpComplex::to_string() const { return "(" + re.to_string() + ", " + im.to_string() + ")"; }

MpComplex& MpComplex::operator+=(const MpComplex& o) {
  re += o.re;
  im += o.im;
  return *this;
}
MpComplex& MpComplex::operator-=(const MpComplex& o) {
  re -= o.re;
  im -= o.im;
  return *this;
}
MpComplex& MpComplex::operator*=(const MpComplex& o) {
  MpReal tmp(re.ctx());
  mp::mul(*this, *this, o, tmp);
  return *this;
}
MpComplex& MpComplex::operator*=(const MpReal& o) {
  re *= o;
  im *= o;
  return *this;
}
MpComplex& MpComplex::operator/=(const MpComplex& o) {
  *this = *this / o;
  return *this;
}
MpComplex& MpComplex::operator/=(const MpReal& o) {
  re /= o;
  im /= o;
  return *this;
}

MpComplex operator+(const MpComplex& a, const MpComplex& b) { return MpComplex(a.re + b.re, a.im + b.im); }
MpComplex operator-(const MpComplex& a, const MpComplex& b) { return MpComplex(a.re - b.re, a.im - b.im); }

MpComplex operator*(const MpComplex& a, const MpComplex& b) {
  PrecisionCtx ctx = ctx_of(std::max(mpfr_get_prec(a.re.raw()), mpfr_get_prec(b.re.raw())));
  MpComplex r(ctx);
  mpfr_fmms(r.re.raw(), a.re.raw(), b.re.raw(), a.im.raw(), b.im.raw(), kRnd);
  mpfr_fmma(r.im.raw(), a.re.raw(), b.im.raw(), a.im.raw(), b.re.raw(), kRnd);
  return r;
}
MpComplex operator*(const MpComplex& a, const MpReal& b) { return MpComplex(a.re * b, a.im * b); }
MpComplex operator*(const MpReal& a, const MpComplex& b) { return b * a; }

MpComplex operator/(const MpComplex& a, const MpComplex& b) {
  // Smith's algorithm keeps intermediate magnitudes bounded.
  if (abs(b.re) >= abs(b.im)) {
    MpReal r = b.im / b.re;
    MpReal d = b.re + b.im * r;
    return MpComplex((a.re + a.im * r) / d, (a.im - a.re * r) / d);
  }
  MpReal r = b.re / b.im;
  MpReal d = b.re * r + b.im;
  return MpComplex((a.re * r + a.im) / d, (a.im * r - a.re) / d);
}
MpComplex operator/(const MpComplex& a, const MpReal& b) { return MpComplex(a.re / b, a.im / b); }

bool operator==(const MpComplex& a, const MpComplex& b) { return a.re == b.re && a.im == b.im; }

MpComplex conj(const MpComplex& a) { return MpComplex(a.re, -a.im); }

MpReal norm(const MpComplex& a) {
  MpReal r(a.ctx());
  mpfr_fmma(r.raw(), a.re.raw(), a.re.raw(), a.im.raw(), a.im.raw(), kRnd);
  return r;
}

MpReal abs(const MpComplex& a) {
  MpReal r(a.ctx());
  mpfr_hypot(r.raw(), a.re.raw(), a.im.raw(), kRnd);
  return r;
}

MpReal arg(const MpComplex& a) { return atan2(a.im, a.re); }

MpComplex expi(const MpReal& theta) {
  MpComplex r(theta.ctx());
  mpfr_sin_cos(r.im.raw(), r.re.raw(), theta.raw(), kRnd);
  return r;
}

MpComplex exp(const MpComplex& a) {
  MpComplex r = expi(a.im);
  MpReal m = exp(a.re);
  r.re *= m;
  r.im *= m;
  return r;
}

MpComplex sin(const MpComplex& a) {
  MpReal s(a.ctx()), c(a.ctx()), sh(a.ctx()), ch(a.ctx());
  mpfr_sin_cos(s.raw(), c.raw(), a.re.raw(), kRnd);
  mpfr_sinh_cosh(sh.raw(), ch.raw(), a.im.raw(), kRnd);
  return MpComplex(s * ch, c * sh);
}

MpComplex cos(const MpComplex& a) {
  MpReal s(a.ctx()), c(a.ctx()), sh(a.ctx()), ch(a.ctx());
  mpfr_sin_cos(s.raw(), c.raw(), a.re.raw(), kRnd);
  mpfr_sinh_cosh(sh.raw(), ch.raw(), a.im.raw(), kRnd);
  return MpComplex(c * ch, -(s * sh));
}

MpComplex cot(const MpComplex& a) {
  // cot(x+iy) = (sin 2x - i sinh 2y) / (2 (sinh^2 y + sin^2 x)); the denominator form
  // avoids the cancellation in cosh 2y - cos 2x near the poles.
  PrecisionCtx ctx = a.ctx();
  MpReal sx = sin(a.re);
  MpReal shy = sinh(a.im);
  MpReal den(ctx);
  mpfr_fmma(den.raw(), sx.raw(), sx.raw(), shy.raw(), shy.raw(), kRnd);
  den = ldexp(den, 1);
  MpReal two_x = ldexp(a.re, 1);
  MpReal two_y = ldexp(a.im, 1);
  return MpComplex(sin(two_x) / den, -(sinh(two_y) / den));
}

MpComplex csc2(const MpComplex& a) {
  MpComplex s = sin(a);
  MpComplex s2 = s * s;
  MpReal n = norm(s2);
  return MpComplex(s2.re / n, -(s2.im / n));
}

// ---------------------------------------------------------------- kernels

namespace mp {

void add(MpComplex& d, const MpComplex& a, const MpComplex& b) {
  mpfr_add(d.re.raw(), a.re.raw(), b.re.raw(), kRnd);
  mpfr_add(d.im.raw(), a.im.raw(), b.im.raw(), kRnd);
}

void sub(MpComplex& d, const MpComplex& a, const MpComplex& b) {
  mpfr_sub(d.re.raw(), a.re.raw(), b.re.raw(), kRnd);
  mpfr_sub(d.im.raw(), a.im.raw(), b.im.raw(), kRnd);
}

void mul(MpComplex& d, const MpComplex& a, const MpComplex& b, MpReal& tmp) {
  mpfr_fmms(tmp.raw(), a.re.raw(), b.re.raw(), a.im.raw(), b.im.raw(), kRnd);
  mpfr_fmma(d.im.raw(), a.re.raw(), b.im.raw(), a.im.raw(), b.re.raw(), kRnd);
  mpfr_set(d.re.raw(), tmp.raw(), kRnd);
}

void mul(MpComplex& d, const MpComplex& a, const MpReal& r) {
  mpfr_mul(d.re.raw(), a.re.raw(), r.raw(), kRnd);
  mpfr_mul(d.im.raw(), a.im.raw(), r.raw(), kRnd);
}

void mul_conj(MpComplex& d, const MpComplex& a, const MpComplex& b, MpReal& tmp) {
  mpfr_fmma(tmp.raw(), a.re.raw(), b.re.raw(), a.im.raw(), b.im.raw(), kRnd);
  mpfr_fmms(d.im.raw(), a.re.raw(), b.im.raw(), a.im.raw(), b.re.raw(), kRnd);
  mpfr_set(d.re.raw(), tmp.raw(), kRnd);
}

void add_mul(MpComplex& acc, const MpComplex& a, const MpComplex& b, MpReal& tmp) {
  mpfr_fmms(tmp.raw(), a.re.raw(), b.re.raw(), a.im.raw(), b.im.raw(), kRnd);
  mpfr_add(acc.re.raw(), acc.re.raw(), tmp.raw(), kRnd);
  mpfr_fmma(tmp.raw(), a.re.raw(), b.im.raw(), a.im.raw(), b.re.raw(), kRnd);
  mpfr_add(acc.im.raw(), acc.im.raw(), tmp.raw(), kRnd);
}

void add_conj_mul(MpComplex& acc, const MpComplex& a, const MpComplex& b, MpReal& tmp) {
  mpfr_fmma(tmp.raw(), a.re.raw(), b.re.raw(), a.im.raw(), b.im.raw(), kRnd);
  mpfr_add(acc.re.raw(), acc.re.raw(), tmp.raw(), kRnd);
  mpfr_fmms(tmp.raw(), a.re.raw(), b.im.raw(), a.im.raw(), b.re.raw(), kRnd);
  mpfr_add(acc.im.raw(), acc.im.raw(), tmp.raw(), kRnd);
}

void add_mul(MpComplex& acc, const MpComplex& a, const MpReal& r) {
  mpfr_fma(acc.re.raw(), a.re.raw(), r.raw(), acc.re.raw(), kRnd);
  mpfr_fma(acc.im.raw(), a.im.raw(), r.raw(), acc.im.raw(), kRnd);
}

void sub_mul(MpComplex& acc, const MpComplex& a, const MpReal& r) {
  // acc - a*r == -(a*r - acc)
  mpfr_fms(acc.re.raw(), a.re.raw(), r.raw(), acc.re.raw(), kRnd);
  mpfr_neg(acc.re.raw(), acc.re.raw(), kRnd);
  mpfr_fms(acc.im.raw(), a.im.raw(), r.raw(), acc.im.raw(), kRnd);
  mpfr_neg(acc.im.raw(), acc.im.raw(), kRnd);
}

void add_norm(MpReal& acc, const MpComplex& a) {
  mpfr_fma(acc.raw(), a.re.raw(), a.re.raw(), acc.raw(), kRnd);
  mpfr_fma(acc.raw(), a.im.raw(), a.im.raw(), acc.raw(), kRnd);
}

void set_zero(MpComplex& d) {
  mpfr_set_zero(d.re.raw(), 1);
  mpfr_set_zero(d.im.raw(), 1);
}

}  // namespace mp

}  // namespace dno
