#ifndef STOCHMPS_MASTER_HPP
#define STOCHMPS_MASTER_HPP

#include <vector>

#include "stochmps/channel.hpp"
#include "stochmps/smps.hpp"

namespace stochmps {

// Generator data (H, {R_j}) for the unital (Heisenberg-side) Lindbladian
//   L0[Y] = Q Y + Y Q† + Σ_j R_j Y R_j†,   Q = iH − ½ Σ_j R_j R_j†,
// so that L0[1] = 0. The Schrödinger-side generator is its adjoint.
struct LindbladGenerator {
  Matrix H;
  std::vector<Matrix> Rs;
  int dim() const { return static_cast<int>(H.rows()); }
};

Matrix lindblad_q(const LindbladGenerator& g);
Superoperator build_L0(const LindbladGenerator& g);

// p(t) = exp(tG) p0 for a classical rate matrix G (nonnegative off-diagonal,
// zero column sums).
RealVector classical_master_reference(const RealMatrix& g, const RealVector& p0, double t);
// Same evolution by fixed-step RK4; the independent second route.
RealVector classical_master_rk4(const RealMatrix& g, const RealVector& p0, double t, double dt);

// Marginal P(X_n = .) computed from explicit superoperator matrix products
//   (two site factors against Γ^{n-2} of evolution and the dressed closure),
// rather than the matrix-level contraction used by marginal_at.
RealVector discrete_marginal_evolution(const StochasticMPS& s, int n);

// Per-symbol pieces S^{(k)} of a total generator L = Σ_k S^{(k)}; the
// instantaneous marginal rate of symbol k at time t is
//   d/dt P(X_t = k) = Tr(rho exp(tL)[ S^{(k)}[1] ]).
struct MarginalRateFamily {
  std::vector<Superoperator> parts;
  Superoperator total() const;
  double decomposition_residual(const Superoperator& l) const;
};

RealVector continuous_marginal_rates(const Superoperator& l, const MarginalRateFamily& s,
                                     const Matrix& rho, double t);

// P(X_t = .) for the same family, from the semigroup applied to each
// symbol projector; rates are its exact time derivative.
RealVector continuous_marginal_distribution(const Superoperator& l, int n_symbols,
                                            const std::vector<Matrix>& projectors,
                                            const Matrix& rho, double t);

// Birth-death construction on the counter lattice 0..n_max with internal
// blocks. amplitude blocks are indexed by the source level: birth[m] is the
// m -> m+1 amplitude, death[m] the m -> m-1 amplitude, diag[m] the local
// Ĝ_{m,m} block with Q^{(m)} = -½ diag[m]. Unitality of the total generator
// requires ½(diag[m] + diag[m]†) = birth[m]† birth[m] + death[m]† death[m]
// (boundary terms absent), which build checks within `tol`.
struct BirthDeathBlocks {
  int n_max = 0;
  int internal_dim = 1;
  std::vector<Matrix> diag;   // size n_max+1
  std::vector<Matrix> birth;  // size n_max+1, birth[n_max] ignored (reflecting)
  std::vector<Matrix> death;  // size n_max+1, death[0] ignored
};

BirthDeathBlocks classical_birth_death_blocks(const RealVector& lambda, const RealVector& mu);

struct BirthDeathGenerator {
  Superoperator total;
  MarginalRateFamily rates;
  std::vector<Matrix> projectors;  // P̂_n = 1 ⊗ |n><n|
  double consistency_residual = 0.0;
};

BirthDeathGenerator birth_death_generator(const BirthDeathBlocks& blocks, double tol = 1e-9);

// Classical birth-death rate matrix on 0..n_max (columns = source states).
RealMatrix birth_death_rate_matrix(const RealVector& lambda, const RealVector& mu);

}  // namespace stochmps

#endif
