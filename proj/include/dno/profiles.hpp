#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "json.hpp"

#include "dno/depth.hpp"
#include "dno/mpnum.hpp"
#include "dno/spectral.hpp"

namespace dno {

/// Surface elevation η(x) = Σ η̂_k e^{2πikx/L}, stored by its nonnegative modes.
///
/// Negative modes are implied by conjugate symmetry. The extrema of η are located
/// once at construction (4× oversampled grid, then Newton on η' = 0).
class WaveProfile {
 public:
  /// `coeffs` maps k ≥ 0 to η̂_k; η̂_0 must be real. Throws std::invalid_argument on a negative
  /// key, complex mean, or (finite depth) a surface touching the bottom.
  WaveProfile(std::map<int, MpComplex> coeffs, Depth depth, MpReal L);
  /// Flat surface η ≡ 0 with period 2π.
  static WaveProfile flat(Depth depth, const PrecisionCtx& ctx);

  const std::map<int, MpComplex>& coeffs() const noexcept { return coeffs_; }
  const Depth& depth() const noexcept { return depth_; }
  const MpReal& L() const noexcept { return L_; }
  PrecisionCtx ctx() const { return L_.ctx(); }
  int kmax() const noexcept { return coeffs_.empty() ? 0 : coeffs_.rbegin()->first; }
  /// η̂_k for any integer k.
  MpComplex coeff(int k) const;

  const MpReal& eta_max() const noexcept { return eta_max_; }
  const MpReal& x_max() const noexcept { return x_max_; }
  /// Minimum over the oversampled grid (not polished).
  const MpReal& eta_min() const noexcept { return eta_min_; }

  /// d^order η / dx^order at x, by direct summation.
  MpReal eval(const MpReal& x, int order = 0) const;
  /// Modes of ∂_x^order η aliased onto an M-point grid, in FFT order including the Nyquist slot.
  ModeVector folded_modes(int M, int order = 0) const;
  /// Exact samples of ∂_x^order η on the grid (aliasing folded in).
  std::vector<MpReal> samples(const Grid& grid, int order = 0) const;
  SurfaceField sample(const Grid& grid, int order = 0) const;

  /// ε η
  WaveProfile scaled(const MpReal& epsilon) const;
  WaveProfile with_depth(Depth depth) const;

 private:
  void locate_extrema();

  std::map<int, MpComplex> coeffs_;
  Depth depth_;
  MpReal L_;
  MpReal eta_max_, x_max_, eta_min_;
};

enum class ExampleKind { bandlimited, analytic, smooth };

/// The three test profiles f:
///   bandlimited  cos(x − π/6)
///   analytic     sinh 1 / (cosh 1 − cos x),  f̂_k = e^{−|k|}
///   smooth       f̂_k = e^{−1.5|k|^{2/3}}
/// Infinite series are truncated where the modes drop below 2^(−bits−16), or at |k| < max_k/2
/// when max_k is given (use the grid size M to avoid aliasing).
WaveProfile example_profile(ExampleKind kind, const PrecisionCtx& ctx, std::optional<int> max_k = std::nullopt,
                            Depth depth = Depth::infinite());
/// f̂_k = e^{−α|k|^β} with the same truncation rule.
WaveProfile fab_profile(const MpReal& alpha, const MpReal& beta, std::optional<int> max_k = std::nullopt,
                        Depth depth = Depth::infinite());
/// Random real profile with modes 1..kmax (zero mean), spectrum decaying like 1/k, scaled so that
/// max |η| over a fine grid equals `amplitude`. Deterministic in `seed` on every platform.
WaveProfile random_bandlimited(int kmax, const MpReal& amplitude, std::uint64_t seed, Depth depth);

/// Harmonic function with closed-form Dirichlet and Neumann traces on a profile.
struct ExactPair {
  WaveProfile profile;
  std::function<MpReal(const MpReal&)> dirichlet;
  std::function<MpReal(const MpReal&)> neumann;

  SurfaceField dirichlet_on(const Grid& grid) const { return SurfaceField::from_function(grid, dirichlet); }
  SurfaceField neumann_on(const Grid& grid) const { return SurfaceField::from_function(grid, neumann); }
};

/// φ = ½ Im{cot(z/2) − cot((z + 2ih)/2)}, z = x + iy, on η(x) = offset − ε cos x.
/// For infinite depth the image term becomes the constant ½. Neumann data is φ_y − η_x φ_x.
/// Throws std::invalid_argument when the pole at the origin is not strictly above the surface
/// (offset − ε ≥ 0) or the surface does not clear the bottom.
ExactPair polepair_exact(const MpReal& epsilon, const MpReal& offset, const Depth& depth);

/// The same field with its pole at (0, d), φ = ½ Im{cot((z − id)/2) − cot((z + i(d + 2h))/2)},
/// traced on an arbitrary profile (the image term is the constant ½ at infinite depth).
/// Requires d > η_max.
ExactPair pole_field_on(const WaveProfile& profile, const MpReal& d);

/// Truncated series 1 + Σ_{k=1}^{K} e^{kη} cos kx and its normal derivative for η = −ε cos x,
/// next to the exact traces of the pole pair, sampled on a grid.
struct DivergenceDemo {
  std::vector<MpReal> x, eta;
  std::vector<MpReal> dirichlet, neumann;
  std::vector<MpReal> exact_dirichlet, exact_neumann;
  std::vector<MpReal> c;  // c_0..c_K
};
DivergenceDemo divergent_series_demo(const MpReal& epsilon, int K, const Grid& grid);

/// Profile and Dirichlet data exchanged as decimal strings.
struct SurfaceFile {
  WaveProfile profile;
  std::map<int, MpComplex> dirichlet;  // k ≥ 0
  nlohmann::json meta = nlohmann::json::object();

  /// Dirichlet samples on the grid from the stored modes.
  SurfaceField dirichlet_on(const Grid& grid) const;
};

/// Throws std::runtime_error for unreadable files and std::invalid_argument for schema violations.
SurfaceFile load_surface_file(const std::filesystem::path& path, const PrecisionCtx& ctx);
SurfaceFile parse_surface_json(const nlohmann::json& doc, const PrecisionCtx& ctx);
nlohmann::json surface_json(const SurfaceFile& file);
void save_surface_file(const std::filesystem::path& path, const SurfaceFile& file);

}  // namespace dno
