#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dno/depth.hpp"
#include "dno/mpnum.hpp"
#include "dno/profiles.hpp"
#include "dno/spectral.hpp"

namespace dno {

/// Fourier-space matrix of one expansion term, columns j = 0..ncols-1 with all rows
/// −M/2 < k < M/2 in FFT order (Nyquist row zero). Columns with j < 0 follow from
/// X_{−k,−j} = conj X_{kj}.
class OperatorMatrix {
 public:
  OperatorMatrix(int order, int M, int ncols, const PrecisionCtx& ctx);

  int order() const noexcept { return order_; }
  int M() const noexcept { return M_; }
  int ncols() const noexcept { return ncols_; }
  /// Entry (k, j) for |k| < M/2 and |j| < ncols; throws std::out_of_range otherwise.
  MpComplex entry(int k, int j) const;
  ModeVector& column(int j) { return cols_[static_cast<size_t>(j)]; }
  const ModeVector& column(int j) const { return cols_[static_cast<size_t>(j)]; }
  /// Σ_{|j| < ncols} X_{kj} v_j for modes v on the same grid.
  ModeVector apply(const ModeVector& v) const;

 private:
  int order_, M_, ncols_;
  std::vector<ModeVector> cols_;
};

/// Zero pattern of a band-limited profile: the entries of A_n and G_n that vanish exactly.
struct ZeroPattern {
  int band = 0;              // f̂_k = 0 for |k| > band
  bool parity = false;       // only odd modes present (so (f^n)^ lives on k ≡ n mod 2)
  bool single_harmonic = false;  // band = 1 with zero mean: |k| + |j| ≤ n as well
  /// True when entry (k, j) of the order-n term must be zero.
  bool zero(int n, int k, int j) const;
};

/// Column-wise evaluation of the expansion terms G_n(f), n = 0..n_max, on an M-point grid.
///
///   G_n = A_n − Σ_{s=1}^{n−1} Y_{n−s} f^{n−s} G_s / (n−s)!,
///   A_n^_{kj} = (j k^n / n!) a_{nkj} (f^n)^_{k−j},   |k − j| < M/2,
///
/// with a_{nkj} = t_k − t_j (n even) or 1 − t_k t_j (n odd), t_k = tanh(kh) (sgn k for
/// infinite depth), Y_s = |D|^s for even s and |D|^s tanh(h|D|) for odd s (|D|^s at infinite
/// depth). Multiplication by f^{n−s} happens on the grid. Immutable; column() may be called
/// concurrently.
class CsEngine {
 public:
  /// filter = true zeroes the exact zero pattern of a band-limited f after each order.
  /// Requires L = 2π, M even and ≥ 8.
  CsEngine(const WaveProfile& f, int n_max, int M, bool filter);

  int n_max() const noexcept { return n_max_; }
  int M() const noexcept { return M_; }
  PrecisionCtx ctx() const { return PrecisionCtx(bits_); }
  const Depth& depth() const noexcept { return depth_; }
  bool filtered() const noexcept { return filter_; }
  const ZeroPattern& pattern() const noexcept { return pattern_; }

  /// (f^n)^ on the grid, FFT order.
  const ModeVector& fpow_modes(int n) const { return fpow_modes_[static_cast<size_t>(n)]; }
  /// log10 of max_{20|k| ≥ 9M} |(f^{n_max})^_k| relative to the peak (−inf if the tail is
  /// exactly zero). Large values mean M is too small for the requested order.
  double tail_log10() const noexcept { return tail_log10_; }
  /// Human-readable warning when the tail ratio exceeds 2^(−bits/2), else empty.
  const std::string& tail_warning() const noexcept { return tail_warning_; }

  /// |k|^n / n! for 0 ≤ k ≤ M/2.
  const MpReal& kpow(int n, int k) const { return kpow_[static_cast<size_t>(n)][static_cast<size_t>(k)]; }
  /// A_n^_{kj} for one entry.
  MpComplex a_entry(int n, int k, int j) const;

  struct Column {
    int j = 0;
    std::vector<ModeVector> a;  // orders 0..n_max (a[0] unused, zero)
    std::vector<ModeVector> g;
  };
  /// Column j ≥ 0 of every term.
  Column column(int j) const;

  /// Same recursion applied to a whole vector instead of a unit column: returns (G_n v)^,
  /// n = 0..n_max. A_n v is summed directly from the entry formula.
  std::vector<ModeVector> apply(const ModeVector& v) const;

 private:
  // Fills g[1..n_max] from g[0] and a[1..n_max]; j < 0 means "no column" (no filtering).
  void recurse(std::vector<ModeVector>& g, const std::vector<ModeVector>& a, int j, Fourier& fourier) const;

  int n_max_, M_, bits_;
  bool filter_;
  Depth depth_;
  ZeroPattern pattern_;
  std::vector<std::vector<MpReal>> fpow_;  // f^m on the grid, m = 0..n_max
  std::vector<ModeVector> fpow_modes_;
  std::vector<std::vector<MpReal>> kpow_;  // |k|^n / n!, k = 0..M/2
  std::vector<MpReal> t_;                  // t_k for k = 0..M/2 (t_{-k} = −t_k)
  std::vector<std::vector<MpReal>> y_;     // symbol of Y_m / m!, k = 0..M/2
  double tail_log10_ = 0.0;
  std::string tail_warning_;
};

/// G_0..G_{n_max} with columns 0 ≤ j < K/2 (and A_n alongside), all rows. The columns are
/// distributed over OpenMP threads; results do not depend on the schedule.
struct CsTerms {
  std::vector<OperatorMatrix> a, g;
};
CsTerms gn_recursion(const WaveProfile& f, int n_max, int M, int K, bool filter);
/// Single-threaded reference; bit-identical to gn_recursion.
CsTerms gn_recursion_serial(const WaveProfile& f, int n_max, int M, int K, bool filter);

/// Frobenius norms, self-adjointness defects and noise diagnostics per order.
struct CancellationReport {
  std::vector<MpReal> norm_a;  // ‖A_n‖_F over k<0<j (both quadrants), |k−j| < M/2; all k at finite depth
  std::vector<MpReal> norm_g;  // ‖G_n‖_F over |k| < K/2, 0 < j < K/2, times √2
  std::vector<MpReal> r;       // max |G_kj − conj G_jk| over |k|,|j| < K/2, divided by ‖G_n‖_F
  std::vector<double> noise_ratio;  // max over columns of outer/interior median magnitude
  std::optional<MpReal> rescale;    // ε for the ε^n ‖A_n‖ view
  double tail_log10 = 0.0;
  std::string tail_warning;

  /// ε^n ‖A_n‖_F when a rescale factor is set, else ‖A_n‖_F.
  MpReal scaled_norm_a(int n) const;
  /// True when any order's noise ratio exceeds 1 (precision insufficient).
  bool noise_flagged() const;
};
/// Streams columns so memory stays O(K² n_max) rather than O(M K n_max).
/// symmetry = false skips r_n (and the block storage it needs).
CancellationReport cancellation_report(const CsEngine& engine, int K, bool symmetry = true,
                                       std::optional<MpReal> rescale = std::nullopt);

/// Median |entry| over the outer 10% of rows (20|k| ≥ 9M) divided by the median over the rest;
/// 0 when both vanish, +inf when only the interior does.
double noise_ratio(const ModeVector& column);

/// (G_n v)^ for n = 0..n_max assembled from columns 0 < |j| < K/2 of the terms, streamed in
/// batches so memory stays bounded.
std::vector<ModeVector> gn_apply_columns(const CsEngine& engine, const ModeVector& v, int K);

/// Errors of the partial sums Σ_{m≤n} G_m 𝒟 against exact Neumann samples:
///   Ê_k = 𝒩̂_k − Σ_{m≤n} (G_m𝒟)^_k for |k| < cutoff, 𝒩̂_k − (G_0𝒟)^_k otherwise,
/// ‖E‖ = sqrt((1/M) Σ_j |E(x_j)|²).
struct PartialSumErrors {
  std::vector<MpReal> rms;          // n = 0..n_max
  std::vector<ModeVector> spectra;  // Ê^(n), FFT order
};
PartialSumErrors apply_partial_sum(const std::vector<ModeVector>& terms, std::span<const MpReal> neumann, int cutoff);

/// Σ_{n ≤ n_max} G_n(η) 𝒟 as grid samples (vector recursion).
std::vector<MpReal> cs_neumann(const WaveProfile& eta, const SurfaceField& dirichlet, int n_max);

}  // namespace dno
