#pragma once

#include <vector>

#include "dno/linalg.hpp"
#include "dno/profiles.hpp"
#include "dno/spectral.hpp"

namespace dno {

/// Values on the Fourier–Chebyshev grid: value(i, j) at y_i = h(s_i − 1)/2, s_i = cos(πi/N)
/// (i = 0 is the surface y = 0, i = N the bottom), x_j = 2πj/M. Row i holds y fixed.
struct BulkGrid {
  int M = 0, N = 0;
  std::vector<MpReal> v;  // (N+1) × M, row-major
  MpReal& operator()(int i, int j) { return v[static_cast<size_t>(i) * M + j]; }
  const MpReal& operator()(int i, int j) const { return v[static_cast<size_t>(i) * M + j]; }
};

/// u_{n,x}, u_{n,y} of one order plus the Chebyshev coefficients α_j^n(k) of û_n(k,·),
/// k = 0..M/2−1 (negative k by conjugation).
struct BulkField {
  int order = 0;
  BulkGrid ux, uy;
  std::vector<std::vector<MpComplex>> alpha;  // [k][j]
};

/// F_1..F_5 of one order on the bulk grid, as defined for the flattened Laplacian
/// Δu_n = ∂ₓF₁ + ∂_yF₂ + F₃.
struct TfeForcing {
  BulkGrid F1, F2, F3, F4, F5;
};

/// Partial norms κ_{nj} = sqrt(Σ_k |α_j^n(k)|²) and γ_{nk} = sqrt(Σ_j |α_j^n(k)|²), with the
/// sum over k running over −M/2 < k < M/2.
struct TfeNorms {
  std::vector<std::vector<MpReal>> kappa;  // [n][j]
  std::vector<std::vector<MpReal>> gamma;  // [n][k], k = 0..M/2−1
};

/// Weak-form Chebyshev–Galerkin solver for û'' − k²û = ikF̂₁ + ∂_yF̂₂ + F̂₃ on [−h, 0] with
/// û(0) = 0 and the natural bottom condition û' − F̂₂ = 0 (which is û' = 0 whenever the
/// lower orders satisfy the bottom condition). Trial and test functions are T_m(s) − 1,
/// m = 1..N; all integrals are evaluated exactly from Chebyshev products. Factorizations
/// are cached per |k| and the solve is thread-safe once prepare() has run for k.
class TfeBvp {
 public:
  TfeBvp(int N, const MpReal& h);
  int N() const noexcept { return N_; }
  /// Factorizes the system for wavenumbers 0..kmax.
  void prepare(int kmax);
  /// F̂ given as Chebyshev coefficients (degree ≤ N); returns those of û.
  ChebCoeffs solve(int k, const ChebCoeffs& F1, const ChebCoeffs& F2, const ChebCoeffs& F3) const;

 private:
  int N_;
  MpReal h_;
  std::vector<std::vector<MpReal>> P_, Q_;  // ∫T_j φ_l ds, ∫T_j φ_l' ds
  std::vector<std::vector<MpReal>> S_, Mass_;
  std::vector<LuFactorization> lu_;
};

/// Transformed field expansion for a finite-depth profile η and Dirichlet data 𝒟 on the
/// same 2π grid. Orders are computed sequentially on demand; within an order the
/// wavenumber solves and row transforms run in parallel (parallel = false forces one thread).
class TfeSolver {
 public:
  TfeSolver(const WaveProfile& eta, const SurfaceField& dirichlet, int N, bool parallel = true);

  int M() const noexcept { return M_; }
  int N() const noexcept { return N_; }
  const MpReal& h() const noexcept { return h_; }
  /// Highest order computed so far.
  int order() const noexcept { return static_cast<int>(fields_.size()) - 1; }
  /// Computes orders up to n.
  void run_to(int n);
  const BulkField& field(int n) const { return fields_.at(static_cast<size_t>(n)); }
  /// Forcing of order n ≥ 1 from the stored orders < n.
  TfeForcing forcing(int n) const;
  /// G_n(η)𝒟 = [−η_x u_{n−1,x} + Σ_{m=0}^{n} (−η/h)^m u_{n−m,y}
  ///            + η_x² Σ_{m=0}^{n−2} (−η/h)^m u_{n−2−m,y}]_{y=0}
  SurfaceField gn(int n) const;
  TfeNorms norms() const;
  std::vector<MpReal> y_nodes() const;

 private:
  BulkField solve_order(const TfeForcing& F) const;
  BulkField from_modes(int order, std::vector<std::vector<MpComplex>> alpha) const;

  int M_, N_;
  bool parallel_;
  MpReal h_;
  Grid grid_;
  std::vector<MpReal> f_, fx_;
  std::vector<std::vector<MpReal>> pw_;  // (−η/h)^m on the grid
  TfeBvp bvp_;
  std::vector<BulkField> fields_;
};

}  // namespace dno
