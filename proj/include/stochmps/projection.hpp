#ifndef STOCHMPS_PROJECTION_HPP
#define STOCHMPS_PROJECTION_HPP

#include <string>
#include <vector>

#include "stochmps/master.hpp"

namespace stochmps {

// Indexed superoperator family M_ij acting on n_in × n_in matrices,
// i, j = 0..n_out-1, with Σ_{i,j} x_i x̄_j M_ij completely positive and
// Σ_j M_jj[1] = 1. Stored in canonical Kraus-block form
//   M_ij[σ] = Σ_k A^{i,k} σ A^{j,k†},  Σ_{j,k} A^{j,k} A^{j,k†} = 1.
//
// The family Choi matrix is assembled with the index order
// (system-out i) ⊗ (map-out a) ⊗ (map-in α):
//   C[(i,a,α),(j,b,β)] = ⟨a| M_ij[|α⟩⟨β|] |b⟩,
// so C = Σ_k |X_k⟩⟨X_k| with X_k[(i,a,α)] = A^{i,k}(a,α).
struct ProjectionFamily {
  int n_out = 0;
  int n_in = 0;
  std::vector<std::vector<Matrix>> blocks;  // [i][k], each n_in x n_in

  int rank() const { return blocks.empty() ? 0 : static_cast<int>(blocks.front().size()); }
  Superoperator m_ij(int i, int j) const;
  Matrix effect(int i, int j) const;        // M_ij[1]
  double normalization_residual() const;    // ||Σ_{j,k} A A† − 1||_max
};

using RawFamily = std::vector<std::vector<Superoperator>>;  // [i][j]

Matrix assemble_choi(const RawFamily& m);
RawFamily family_superoperators(const ProjectionFamily& fam);

struct FamilyValidation {
  bool pass = false;
  double choi_min_eigenvalue = 0.0;
  double trace_condition_residual = 0.0;  // ||Σ_j M_jj[1] − 1||_max
  double hermiticity_residual = 0.0;
  std::string summary() const;
};

FamilyValidation validate_family(const RawFamily& m, double tol = 1e-10);

// Kraus blocks from the Choi eigendecomposition; eigenvalues below tol drop.
ProjectionFamily canonicalize(const RawFamily& m, double tol = 1e-10);

// Largest |M_ij reassembled − input| entry over all (i,j).
double reassembly_residual(const ProjectionFamily& fam, const RawFamily& m);

// ρ_ij = Σ_k Tr(σ A^{i,k} A^{j,k†}) = Tr(σ M_ij[1]); Hermitian, PSD, trace 1.
Matrix project_state(const ProjectionFamily& fam, const Matrix& sigma);

// ρ(t) = project_state(fam, exp(tL*)[ρ_T]) with L* the Schrödinger-side
// (adjoint) generator of g, per increasing grid point.
std::vector<Matrix> evolve_projected(const ProjectionFamily& fam, const LindbladGenerator& g,
                                     const Matrix& rho_t0, const std::vector<double>& t_grid);

// Multi-time tensor over pair indices p_t = (i_t, j_t):
//   T[p_1..p_N] = Tr(ρ (M_{p_1} ∘ Γ ∘ M_{p_2} ∘ ... ∘ Γ ∘ M_{p_N})[1]).
// Flattened with p_1 most significant; each pair index is i * n_out + j.
struct MultiTimeTensor {
  int n_out = 0;
  int n_times = 0;
  std::vector<Complex> values;

  Complex at(const std::vector<int>& pair_indices) const;
  // Partial trace of the final slot (sum over i_N = j_N) -> (N-1)-tensor.
  MultiTimeTensor trace_last() const;
};

MultiTimeTensor multitime_joint(const ProjectionFamily& fam, const Superoperator& transfer,
                                const Matrix& rho, int n_times);

// Random valid family: a random PSD Choi, normalized on the map-out leg so
// that Σ_j M_jj[1] = 1.
ProjectionFamily random_projection_family(int n_out, int n_in, int rank, std::uint64_t seed);

}  // namespace stochmps

#endif
