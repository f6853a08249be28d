#pragma once

#include <string>

#include "dno/linalg.hpp"
#include "dno/profiles.hpp"
#include "dno/spectral.hpp"

namespace dno {

/// Smooth periodic double-layer kernels on the surface ζ(α) = α + iη(α), sampled at the
/// collocation pairs (α_i, β_j):
///   A(α,β) = Im{ ζ'(β)/2 cot((ζ(α)−ζ(β))/2) − ½cot((α−β)/2) }
///   B(α,β) = Re{ ζ'(α)/2 cot((ζ(α)−ζ(β))/2) − ½cot((α−β)/2) }
/// with diagonals A(α,α) = Im{−ζ''/(2ζ')} and B(α,α) = Re{ζ''/(2ζ')}. At finite depth the
/// image across y = −h adds
///   −Im{ conj ζ'(β)/2 cot((ζ(α) − conj ζ(β) + 2ih)/2) }  to A,
///   −Re{ ζ'(α)/2     cot((ζ(α) − conj ζ(β) + 2ih)/2) }  to B,
/// which makes ∂φ/∂y vanish on the bottom.
struct BimKernels {
  DenseMatrix A, B;
  WaveProfile profile;
  Grid grid;
};

/// Rows assembled in parallel. Requires L = 2π and a graph surface (ζ' ≠ 0 always holds
/// for ζ = α + iη, so the check is on finite samples).
BimKernels assemble_kernels(const WaveProfile& profile, int M);
/// Single-threaded reference; bit-identical to assemble_kernels.
BimKernels assemble_kernels_serial(const WaveProfile& profile, int M);

/// ½I + (1/M) A, the trapezoidal discretization of the second-kind operator.
DenseMatrix bim_system_matrix(const BimKernels& k);

enum class BimMethod { direct, iterative };

struct BimSolution {
  SurfaceField mu;
  MpReal condition_1;  // ‖S‖₁ · estimate of ‖S⁻¹‖₁
  int iterations = 0;  // GMRES iterations (0 for direct)
  bool fell_back = false;
  std::string warning;
};

/// Solves μ/2 + (1/M) A μ = 𝒟. The iterative path uses restarted GMRES with tolerance
/// 2^(−bits+10) and falls back to LU if it does not converge.
BimSolution bim_solve(const BimKernels& k, const SurfaceField& dirichlet, BimMethod method = BimMethod::direct);

/// 𝒩 = ½H[μ'] + (1/M) B μ', derivative and Hilbert transform spectral.
SurfaceField bim_neumann(const BimKernels& k, const SurfaceField& mu);

/// Kernels, solve and Neumann evaluation in one call.
SurfaceField bim_dno(const WaveProfile& profile, const SurfaceField& dirichlet, BimMethod method = BimMethod::direct);

/// σ_max/σ_min of the system matrix from a full SVD.
MpReal bim_condition(const BimKernels& k);

}  // namespace dno
