#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "dno/depth.hpp"
#include "dno/mpnum.hpp"

namespace dno {

/// Fourier coefficients in FFT order: entry i holds wavenumber i for i < M/2 and i - M above.
using ModeVector = std::vector<MpComplex>;

inline int mode_index(int k, int M) { return k >= 0 ? k : k + M; }
/// Signed wavenumber of FFT slot `i`; the Nyquist slot M/2 maps to +M/2.
inline int wavenumber(int i, int M) { return i <= M / 2 ? i : i - M; }

std::vector<MpComplex> zeros(int n, const PrecisionCtx& ctx);
std::vector<MpReal> real_zeros(int n, const PrecisionCtx& ctx);

/// Uniform periodic grid x_j = L j / M.
class Grid {
 public:
  /// Period defaults to 2π. Throws std::invalid_argument when M < 4.
  Grid(int M, const PrecisionCtx& ctx);
  Grid(int M, MpReal L);

  int M() const noexcept { return M_; }
  const MpReal& L() const noexcept { return L_; }
  PrecisionCtx ctx() const { return L_.ctx(); }
  MpReal x(int j) const;
  std::vector<MpReal> nodes() const;
  /// True when L equals 2π at this precision.
  bool is_2pi() const;
  bool same_as(const Grid& o) const;

 private:
  int M_;
  MpReal L_;
};

/// Precomputed complex DFT of one length at one precision.
///
/// Mixed-radix (4, 2, 3, 5) decimation in time; other prime factors go through
/// Bluestein's chirp transform on a power-of-two plan.
class FftPlan {
 public:
  FftPlan(int n, const PrecisionCtx& ctx);
  /// Shared plan, built once per (n, bits).
  static std::shared_ptr<const FftPlan> get(int n, const PrecisionCtx& ctx);

  int size() const noexcept { return n_; }
  int bits() const noexcept { return bits_; }
  bool uses_bluestein() const noexcept { return bluestein_ != nullptr; }

  /// out_k = Σ_j in_j e^{∓2πi jk/n} (minus sign forward), unnormalized.
  /// `in` and `out` must not overlap.
  void transform(std::span<const MpComplex> in, std::span<MpComplex> out, bool inverse) const;

 private:
  struct Scratch;
  struct Bluestein;
  void work(MpComplex* out, const MpComplex* in, int fstride, const int* factors, bool inverse, Scratch& s) const;
  void bfly2(MpComplex* out, int fstride, int m, bool inverse, Scratch& s) const;
  void bfly4(MpComplex* out, int fstride, int m, bool inverse, Scratch& s) const;
  void bfly_generic(MpComplex* out, int fstride, int m, int p, bool inverse, Scratch& s) const;

  int n_;
  int bits_;
  std::vector<int> factors_;
  std::vector<MpComplex> tw_;
  std::vector<MpComplex> tw_inv_;
  std::shared_ptr<const Bluestein> bluestein_;
};

/// Reusable transform workspace bound to one grid size; not thread safe, use one per task.
class Fourier {
 public:
  Fourier(int M, const PrecisionCtx& ctx);

  int M() const noexcept { return M_; }
  /// modes = (1/M) DFT(values).
  void forward(std::span<const MpComplex> values, std::span<MpComplex> modes);
  void forward(std::span<const MpReal> values, std::span<MpComplex> modes);
  /// values = Σ_k modes_k e^{ikx_j}, with the Nyquist slot treated as zero.
  void inverse(std::span<const MpComplex> modes, std::span<MpComplex> values);
  void inverse_real(std::span<const MpComplex> modes, std::span<MpReal> values);

 private:
  int M_;
  std::shared_ptr<const FftPlan> plan_;
  std::vector<MpComplex> buf_;
  MpReal inv_M_;
};

ModeVector fft_forward(std::span<const MpComplex> values, const Grid& grid);
ModeVector fft_forward(std::span<const MpReal> values, const Grid& grid);
std::vector<MpComplex> fft_inverse(std::span<const MpComplex> modes, const Grid& grid);
std::vector<MpReal> fft_inverse_real(std::span<const MpComplex> modes, const Grid& grid);

/// Real periodic samples on a grid together with their Fourier modes.
///
/// The mode view omits the Nyquist coefficient; a field built from samples keeps
/// the samples verbatim.
class SurfaceField {
 public:
  static SurfaceField from_values(const Grid& grid, std::vector<MpReal> values);
  /// Uses modes for |k| < M/2 only; throws std::invalid_argument if they are not conjugate symmetric
  /// to within a few ulps.
  static SurfaceField from_modes(const Grid& grid, ModeVector modes);
  static SurfaceField from_function(const Grid& grid, const std::function<MpReal(const MpReal&)>& f);

  const Grid& grid() const noexcept { return grid_; }
  int M() const noexcept { return grid_.M(); }
  const std::vector<MpReal>& values() const noexcept { return values_; }
  const ModeVector& modes() const noexcept { return modes_; }
  const MpComplex& mode(int k) const;
  const MpReal& value(int j) const { return values_[j]; }

 private:
  SurfaceField(Grid g, std::vector<MpReal> v, ModeVector m)
      : grid_(std::move(g)), values_(std::move(v)), modes_(std::move(m)) {}
  Grid grid_;
  std::vector<MpReal> values_;
  ModeVector modes_;
};

/// Fourier multiplier k ↦ σ(k).
using Symbol = std::function<MpComplex(int k)>;

/// mode(k) ← σ(k)·mode(k) for |k| < M/2; the Nyquist slot is zeroed. Throws std::domain_error
/// on a non-finite symbol value.
void apply_multiplier(ModeVector& modes, const Symbol& symbol);
/// Requires σ(-k) = conj σ(k) so the result stays real; throws std::invalid_argument otherwise.
SurfaceField apply_multiplier(const SurfaceField& field, const Symbol& symbol);

/// sqrt(mean v_j²); requires a non-empty span.
MpReal rms(std::span<const MpReal> v);
/// RMS of a − b; throws std::invalid_argument on a length mismatch.
MpReal rms_diff(std::span<const MpReal> a, std::span<const MpReal> b);

namespace symbols {
/// D = -i ∂x
Symbol d(const PrecisionCtx& ctx);
/// ∂x
Symbol ddx(const PrecisionCtx& ctx);
Symbol abs_d(const PrecisionCtx& ctx);
Symbol abs_d_pow(int n, const PrecisionCtx& ctx);
/// tanh(h|D|)
Symbol tanh_hd(const MpReal& h);
/// k tanh(kh) for finite depth, |k| for infinite depth.
Symbol g0(const Depth& depth, const PrecisionCtx& ctx);
/// -i sgn(k), sgn(0) = 0.
Symbol hilbert(const PrecisionCtx& ctx);
}  // namespace symbols

/// Spectral derivative of complex periodic samples (Nyquist zeroed).
std::vector<MpComplex> spectral_ddx(std::span<const MpComplex> values, Fourier& fourier);

/// (L/M) Σ_j f_j conj(g_j)
MpComplex trapezoid_ip(const Grid& grid, std::span<const MpComplex> f, std::span<const MpComplex> g);
MpComplex trapezoid_ip(const SurfaceField& f, const SurfaceField& g);

/// Chebyshev-T coefficients α_0..α_N.
struct ChebCoeffs {
  std::vector<MpComplex> alpha;
  int N() const noexcept { return static_cast<int>(alpha.size()) - 1; }
};

/// Lobatto nodes s_i = cos(πi/N), i = 0..N.
std::vector<MpReal> cheb_nodes(int N, const PrecisionCtx& ctx);
/// Coefficients interpolating values at the Lobatto nodes. Throws when N < 2.
ChebCoeffs cheb_transform(std::span<const MpComplex> nodal);
std::vector<MpComplex> cheb_inverse(const ChebCoeffs& coeffs);
/// Coefficients of d/ds. The chain factor 2/h for y = h(s-1)/2 is left to the caller.
ChebCoeffs cheb_differentiate(const ChebCoeffs& alpha);
/// Σ α_j T_j(s); throws std::domain_error when s ∉ [-1, 1].
MpComplex clenshaw_eval(const ChebCoeffs& alpha, const MpReal& s);

}  // namespace dno
