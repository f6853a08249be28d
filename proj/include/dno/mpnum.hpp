#pragma once

#include <mpfr.h>

#include <compare>
#include <concepts>
#include <string>
#include <string_view>

namespace dno {

/// Working precision in bits. Every multiprecision value is created against one.
class PrecisionCtx {
 public:
  /// Throws std::invalid_argument when bits < 24.
  explicit PrecisionCtx(int bits);

  int bits() const noexcept { return bits_; }
  /// Significant decimal digits that guarantee an exact decimal round trip.
  int digits10() const noexcept;
  /// Unit roundoff 2^-bits as a double (underflows to 0 past ~1070 bits).
  double epsilon() const noexcept;

  friend bool operator==(const PrecisionCtx&, const PrecisionCtx&) = default;

 private:
  int bits_;
};

PrecisionCtx ctx_create(int bits);

/// Real number with fixed binary precision, backed by an mpfr_t.
///
/// Assignment rounds into the precision of the destination; binary operators
/// produce the larger of the two operand precisions.
class MpReal {
 public:
  explicit MpReal(const PrecisionCtx& ctx);
  MpReal(const PrecisionCtx& ctx, double v);
  template <std::integral T>
  MpReal(const PrecisionCtx& ctx, T v) : MpReal(ctx) {
    if constexpr (std::is_signed_v<T>)
      mpfr_set_si(x_, static_cast<long>(v), MPFR_RNDN);
    else
      mpfr_set_ui(x_, static_cast<unsigned long>(v), MPFR_RNDN);
  }
  /// Rounds `other` into precision `ctx`.
  MpReal(const PrecisionCtx& ctx, const MpReal& other);

  MpReal(const MpReal& other);
  MpReal(MpReal&& other) noexcept;
  MpReal& operator=(const MpReal& other);
  MpReal& operator=(MpReal&& other) noexcept;
  MpReal& operator=(double v);
  MpReal& operator=(long v);
  MpReal& operator=(int v) { return *this = static_cast<long>(v); }
  ~MpReal();

  /// Parses `[+-]digits[.digits][(e|E)[+-]digits]`. Throws std::invalid_argument otherwise.
  static MpReal parse(const PrecisionCtx& ctx, std::string_view text);

  int bits() const noexcept { return static_cast<int>(mpfr_get_prec(x_)); }
  PrecisionCtx ctx() const { return PrecisionCtx(bits()); }

  mpfr_ptr raw() noexcept { return x_; }
  mpfr_srcptr raw() const noexcept { return x_; }

  double to_double() const noexcept { return mpfr_get_d(x_, MPFR_RNDN); }
  long to_long() const noexcept { return mpfr_get_si(x_, MPFR_RNDN); }
  /// Scientific notation with enough digits for an exact round trip.
  std::string to_string() const;
  std::string to_string(int significant_digits) const;

  bool is_zero() const noexcept { return mpfr_zero_p(x_) != 0; }
  bool is_finite() const noexcept { return mpfr_number_p(x_) != 0; }
  int sign() const noexcept { return mpfr_sgn(x_); }

  MpReal& operator+=(const MpReal& o);
  MpReal& operator-=(const MpReal& o);
  MpReal& operator*=(const MpReal& o);
  MpReal& operator/=(const MpReal& o);
  MpReal& operator*=(long v);
  MpReal& operator/=(long v);
  MpReal& operator*=(double) = delete;
  MpReal& operator/=(double) = delete;
  MpReal operator-() const;

 private:
  mpfr_t x_;
};

MpReal operator+(const MpReal& a, const MpReal& b);
MpReal operator-(const MpReal& a, const MpReal& b);
MpReal operator*(const MpReal& a, const MpReal& b);
MpReal operator/(const MpReal& a, const MpReal& b);
MpReal operator+(const MpReal& a, long b);
MpReal operator-(const MpReal& a, long b);
MpReal operator-(long a, const MpReal& b);
MpReal operator+(long a, const MpReal& b);
MpReal operator*(const MpReal& a, long b);
MpReal operator*(long a, const MpReal& b);
MpReal operator/(const MpReal& a, long b);
MpReal operator/(long a, const MpReal& b);
// Plain ints forward to long; doubles are rejected because the implicit double → long
// conversion would truncate silently. Build an MpReal from the double instead.
inline MpReal operator+(const MpReal& a, int b) { return a + static_cast<long>(b); }
inline MpReal operator-(const MpReal& a, int b) { return a - static_cast<long>(b); }
inline MpReal operator-(int a, const MpReal& b) { return static_cast<long>(a) - b; }
inline MpReal operator+(int a, const MpReal& b) { return static_cast<long>(a) + b; }
inline MpReal operator*(const MpReal& a, int b) { return a * static_cast<long>(b); }
inline MpReal operator*(int a, const MpReal& b) { return static_cast<long>(a) * b; }
inline MpReal operator/(const MpReal& a, int b) { return a / static_cast<long>(b); }
inline MpReal operator/(int a, const MpReal& b) { return static_cast<long>(a) / b; }
MpReal operator+(const MpReal&, double) = delete;
MpReal operator+(double, const MpReal&) = delete;
MpReal operator-(const MpReal&, double) = delete;
MpReal operator-(double, const MpReal&) = delete;
MpReal operator*(const MpReal&, double) = delete;
MpReal operator*(double, const MpReal&) = delete;
MpReal operator/(const MpReal&, double) = delete;
MpReal operator/(double, const MpReal&) = delete;

std::strong_ordering operator<=>(const MpReal& a, const MpReal& b);
bool operator==(const MpReal& a, const MpReal& b);
std::strong_ordering operator<=>(const MpReal& a, long b);
bool operator==(const MpReal& a, long b);
inline std::strong_ordering operator<=>(const MpReal& a, int b) { return a <=> static_cast<long>(b); }
inline bool operator==(const MpReal& a, int b) { return a == static_cast<long>(b); }
std::partial_ordering operator<=>(const MpReal& a, double b);
bool operator==(const MpReal& a, double b);

MpReal abs(const MpReal& a);
MpReal sqrt(const MpReal& a);
MpReal exp(const MpReal& a);
MpReal expm1(const MpReal& a);
MpReal log(const MpReal& a);
MpReal log10(const MpReal& a);
MpReal sin(const MpReal& a);
MpReal cos(const MpReal& a);
MpReal tan(const MpReal& a);
MpReal sinh(const MpReal& a);
MpReal cosh(const MpReal& a);
MpReal tanh(const MpReal& a);
MpReal atan(const MpReal& a);
MpReal atan2(const MpReal& y, const MpReal& x);
MpReal pow(const MpReal& a, const MpReal& b);
MpReal pow(const MpReal& a, long n);
MpReal ldexp(const MpReal& a, long e);
MpReal max(const MpReal& a, const MpReal& b);
MpReal min(const MpReal& a, const MpReal& b);
MpReal pi(const PrecisionCtx& ctx);
/// log10|a| as a double; valid for magnitudes far outside the double range. -inf for zero.
double log10_abs(const MpReal& a);

/// Complex number as a pair of MpReal components of equal precision.
struct MpComplex {
  MpReal re;
  MpReal im;

  explicit MpComplex(const PrecisionCtx& ctx) : re(ctx), im(ctx) {}
  explicit MpComplex(const MpReal& r) : re(r), im(r.ctx()) {}
  MpComplex(const MpReal& r, const MpReal& i) : re(r), im(i) {}
  MpComplex(const PrecisionCtx& ctx, double r, double i = 0.0) : re(ctx, r), im(ctx, i) {}

  int bits() const noexcept { return re.bits(); }
  PrecisionCtx ctx() const { return re.ctx(); }
  bool is_zero() const noexcept { return re.is_zero() && im.is_zero(); }
  bool is_finite() const noexcept { return re.is_finite() && im.is_finite(); }
  std::string to_string() const;

  MpComplex& operator+=(const MpComplex& o);
  MpComplex& operator-=(const MpComplex& o);
  MpComplex& operator*=(const MpComplex& o);
  MpComplex& operator*=(const MpReal& o);
  MpComplex& operator/=(const MpComplex& o);
  MpComplex& operator/=(const MpReal& o);
  MpComplex operator-() const { return MpComplex(-re, -im); }
};

MpComplex operator+(const MpComplex& a, const MpComplex& b);
MpComplex operator-(const MpComplex& a, const MpComplex& b);
MpComplex operator*(const MpComplex& a, const MpComplex& b);
MpComplex operator*(const MpComplex& a, const MpReal& b);
MpComplex operator*(const MpReal& a, const MpComplex& b);
MpComplex operator/(const MpComplex& a, const MpComplex& b);
MpComplex operator/(const MpComplex& a, const MpReal& b);
bool operator==(const MpComplex& a, const MpComplex& b);

MpComplex conj(const MpComplex& a);
/// |a|^2
MpReal norm(const MpComplex& a);
MpReal abs(const MpComplex& a);
MpReal arg(const MpComplex& a);
/// e^{i theta}
MpComplex expi(const MpReal& theta);
MpComplex exp(const MpComplex& a);
MpComplex sin(const MpComplex& a);
MpComplex cos(const MpComplex& a);
MpComplex cot(const MpComplex& a);
/// 1/sin^2(a)
MpComplex csc2(const MpComplex& a);

/// Allocation-free kernels for hot loops. Destinations may alias sources, except that
/// complex-by-complex accumulators must not alias their factors.
namespace mp {
void add(MpComplex& d, const MpComplex& a, const MpComplex& b);
void sub(MpComplex& d, const MpComplex& a, const MpComplex& b);
/// d = a*b; `tmp` is scratch of the working precision.
void mul(MpComplex& d, const MpComplex& a, const MpComplex& b, MpReal& tmp);
void mul(MpComplex& d, const MpComplex& a, const MpReal& r);
/// d = conj(a)*b
void mul_conj(MpComplex& d, const MpComplex& a, const MpComplex& b, MpReal& tmp);
/// acc += a*b
void add_mul(MpComplex& acc, const MpComplex& a, const MpComplex& b, MpReal& tmp);
/// acc += conj(a)*b
void add_conj_mul(MpComplex& acc, const MpComplex& a, const MpComplex& b, MpReal& tmp);
/// acc += a*r
void add_mul(MpComplex& acc, const MpComplex& a, const MpReal& r);
/// acc -= a*r
void sub_mul(MpComplex& acc, const MpComplex& a, const MpReal& r);
/// acc += |a|^2
void add_norm(MpReal& acc, const MpComplex& a);
void set_zero(MpComplex& d);
}  // namespace mp

}  // namespace dno
