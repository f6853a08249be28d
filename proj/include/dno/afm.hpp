#pragma once

#include <optional>
#include <vector>

#include "dno/linalg.hpp"
#include "dno/profiles.hpp"
#include "dno/spectral.hpp"

namespace dno {

/// Column layout of the collocation matrices.
///   complex_exp: columns k = 0, 1, −1, 2, −2, …, ±(K/2−1), entries (1/M) w_k(x_j) e^{ikx_j}.
///   real_trig:   columns 0, cos 1, sin 1, …, entries (√2/M) w_k(x_j) (cos kx_j, sin kx_j),
///                column 0 is 1/M.
/// Both have K−1 columns.
enum class AfmForm { complex_exp, real_trig };

/// Oversampled AFM collocation matrices. With r_k = cosh(k(η+h))/cosh(k(η_max+h)) and
/// s_k = sinh(k(η+h))/cosh(k(η_max+h)) (e^{k(η−η_max)} for both at infinite depth):
///   A c = Σ c_k r_k e^{ikx},   B c = Σ c_k i sgn(k) s_k e^{ikx}.
struct AfmSystem {
  DenseMatrix A, B;
  WaveProfile profile;
  MpReal eta_max;
  Grid grid;
  AfmForm form;
  int K;
  std::vector<int> wavenumber;  // |k| of each column (signed k for complex_exp)
};

/// Requires L = 2π, K even, 4 ≤ K ≤ M. The default form is complex_exp at infinite depth and
/// real_trig at finite depth. Columns are assembled in parallel.
AfmSystem build_system(const WaveProfile& profile, int K, int M, std::optional<AfmForm> form = std::nullopt);

/// Pointwise errors and RMS per pseudo-inverse cutoff 0..K−1 for both methods.
struct CutoffSweep {
  std::vector<MpReal> rms_afm, rms_afmstar;
  int best_afm = 0, best_afmstar = 0;
  std::vector<MpReal> error_afm, error_afmstar;  // E_j at the best cutoffs
};

/// SVD-regularized AFM and AFM* solvers for one system. The SVD is computed once at
/// construction; the solve methods are const and may run concurrently.
class AfmSolver {
 public:
  explicit AfmSolver(AfmSystem sys);

  const AfmSystem& system() const noexcept { return sys_; }
  const SvdFactorization& svd() const noexcept { return svd_; }
  int columns() const noexcept { return sys_.A.cols(); }

  /// 𝒩 = U pinv(S) V* B* ∂ₓ𝒟, keeping singular values with index < cutoff.
  SurfaceField afm_neumann(const SurfaceField& dirichlet, int cutoff) const;
  /// 𝒩 = −∂ₓ B V pinv(S) U* 𝒟.
  SurfaceField afmstar_neumann(const SurfaceField& dirichlet, int cutoff) const;
  /// Errors of both methods for every cutoff, built incrementally (O(MK) after setup).
  CutoffSweep sweep(const SurfaceField& dirichlet, std::span<const MpReal> exact_neumann) const;

 private:
  std::vector<MpComplex> afm_coefficients(const SurfaceField& dirichlet) const;   // V* B* ∂ₓ𝒟
  std::vector<MpComplex> star_coefficients(const SurfaceField& dirichlet) const;  // U* 𝒟
  DenseMatrix star_basis() const;                                                 // −∂ₓ B V

  AfmSystem sys_;
  SvdFactorization svd_;
};

/// AFM (star = false) or AFM* with the pseudo-inverse replaced by an inverse through A = QR:
/// 𝒩 = Q R^{−*} B* ∂ₓ𝒟, or 𝒩 = −∂ₓ B R^{−1} Q* 𝒟.
SurfaceField afm_qr_neumann(const AfmSystem& sys, const SurfaceField& dirichlet, bool star);

/// Discrete AFM transform: c = (1/√M) Qᵀ f from A = QR of the real_trig form, packed as
/// Ñ_0 = c_0, Ñ_k = c_{2k−1} + i c_{2k}. Entries 0..K/2−1.
struct AfmTransform {
  ModeVector coeffs;
  std::vector<int> rank_warnings;
};
AfmTransform afm_transform(const AfmSystem& sys, const SurfaceField& field);

/// Per-wavenumber residual of the discrete global relation A* 𝒩 − B* ∂ₓ𝒟 (column order of A).
std::vector<MpComplex> global_relation_residual(const AfmSystem& sys, const SurfaceField& dirichlet,
                                                std::span<const MpReal> neumann);

/// Unfiltered spectral derivative of real samples (Nyquist mode dropped).
std::vector<MpReal> spectral_derivative(std::span<const MpReal> values, const Grid& grid);

}  // namespace dno
