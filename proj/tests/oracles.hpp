// Independent reference computations used as test oracles. These favour the most
// direct formula over speed.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dno/mpnum.hpp"
#include "dno/spectral.hpp"

namespace oracle {

using dno::MpComplex;
using dno::MpReal;
using dno::PrecisionCtx;

/// out_k = Σ_j in_j e^{-2πi jk/n} by direct summation at doubled precision.
inline std::vector<MpComplex> direct_dft(std::span<const MpComplex> in, bool inverse = false) {
  const int n = static_cast<int>(in.size());
  PrecisionCtx ctx = in[0].ctx();
  PrecisionCtx wide(2 * ctx.bits());
  MpReal two_pi = dno::ldexp(dno::pi(wide), 1);
  std::vector<MpComplex> out;
  for (int k = 0; k < n; ++k) {
    MpComplex acc(wide);
    for (int j = 0; j < n; ++j) {
      long t = (static_cast<long>(j) * k) % n;
      MpComplex w = dno::expi(two_pi * (inverse ? t : -t) / static_cast<long>(n));
      MpComplex x(MpReal(wide, in[static_cast<size_t>(j)].re), MpReal(wide, in[static_cast<size_t>(j)].im));
      acc += x * w;
    }
    out.emplace_back(MpReal(ctx, acc.re), MpReal(ctx, acc.im));
  }
  return out;
}

/// Σ α_j cos(j arccos s)
inline MpComplex cheb_direct(std::span<const MpComplex> alpha, const MpReal& s) {
  PrecisionCtx ctx = s.ctx();
  PrecisionCtx wide(2 * ctx.bits());
  MpReal sw(wide, s);
  MpReal theta = dno::atan2(dno::sqrt(MpReal(wide, 1) - sw * sw), sw);
  MpComplex acc(wide);
  for (size_t j = 0; j < alpha.size(); ++j) {
    MpReal c = dno::cos(theta * static_cast<long>(j));
    acc += MpComplex(MpReal(wide, alpha[j].re), MpReal(wide, alpha[j].im)) * c;
  }
  return MpComplex(MpReal(ctx, acc.re), MpReal(ctx, acc.im));
}

/// Deterministic uniform values in [-1, 1) independent of the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : s_(seed * 0x9E3779B97F4A7C15ULL + 1) {}
  std::uint64_t next() {
    // splitmix64
    std::uint64_t z = (s_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-52 - 1.0; }
  MpReal real(const PrecisionCtx& ctx) {
    // Fill the full mantissa so the value is not just a double.
    MpReal r(ctx, uniform());
    MpReal scale(ctx, 1.0);
    for (int b = 53; b < ctx.bits(); b += 52) {
      scale = dno::ldexp(scale, -52);
      r += MpReal(ctx, uniform()) * scale;
    }
    return r;
  }
  MpComplex complex(const PrecisionCtx& ctx) { return MpComplex(real(ctx), real(ctx)); }

 private:
  std::uint64_t s_;
};

inline MpReal max_abs_diff(std::span<const MpComplex> a, std::span<const MpComplex> b) {
  MpReal m(a[0].ctx());
  for (size_t i = 0; i < a.size(); ++i) m = dno::max(m, dno::abs(a[i] - b[i]));
  return m;
}

inline MpReal max_abs_diff(std::span<const MpReal> a, std::span<const MpReal> b) {
  MpReal m(a[0].ctx());
  for (size_t i = 0; i < a.size(); ++i) m = dno::max(m, dno::abs(a[i] - b[i]));
  return m;
}

inline MpReal ulp_scale(const PrecisionCtx& ctx, int guard) { return dno::ldexp(MpReal(ctx, 1), -(ctx.bits() - guard)); }

}  // namespace oracle
