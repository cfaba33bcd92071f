#ifndef STOCHMPS_CHANNEL_HPP
#define STOCHMPS_CHANNEL_HPP

#include <vector>

#include "stochmps/linalg.hpp"

namespace stochmps {

// Quantum-channel primitives shared by every module.
//
// Conventions, fixed once for the whole library:
//  * vectorization is column-stacking (see linalg.hpp);
//  * Kraus families are normalized as Σ_x A^{(x)} A^{(x)†} = 1, so the
//    transfer map Γ[M] = Σ_x A^{(x)} M A^{(x)†} is unital and the dual
//    update M ↦ Σ_x A^{(x)†} M A^{(x)} is trace preserving;
//  * the Choi matrix of a map S on D×D inputs is the block matrix whose
//    (α,β) block is S(|α⟩⟨β|), i.e. C = Σ_k vec(A_k) vec(A_k)† for a CP map.

// A finite set of same-dimension operators indexed by an outcome alphabet.
struct KrausFamily {
  std::vector<Matrix> ops;  // one square operator per outcome symbol

  int dim() const { return ops.empty() ? 0 : static_cast<int>(ops.front().rows()); }
  int n_symbols() const { return static_cast<int>(ops.size()); }

  // max-abs residual of Σ A A† − 1
  double normalization_residual() const;
  void check_dims() const;  // throws on ragged dimensions
};

class Superoperator {
 public:
  Superoperator() = default;
  explicit Superoperator(int dim) : dim_(dim), mat_(Matrix::Zero(dim * dim, dim * dim)) {}
  Superoperator(Matrix mat, int dim);

  static Superoperator identity(int dim);
  // M ↦ a M b
  static Superoperator sandwich(const Matrix& a, const Matrix& b);
  // M ↦ a M
  static Superoperator left_mult(const Matrix& a);
  // M ↦ M a
  static Superoperator right_mult(const Matrix& a);

  int dim() const { return dim_; }
  const Matrix& matrix() const { return mat_; }

  Matrix apply(const Matrix& m) const;
  // Hilbert-Schmidt adjoint: Tr(S[M]† N) = Tr(M† S*[N]).
  Superoperator adjoint() const { return Superoperator(mat_.adjoint(), dim_); }
  // (*this) ∘ inner
  Superoperator compose(const Superoperator& inner) const;

  Superoperator& operator+=(const Superoperator& o);
  Superoperator& operator-=(const Superoperator& o);
  Superoperator& operator*=(Complex c);
  friend Superoperator operator+(Superoperator a, const Superoperator& b) { return a += b; }
  friend Superoperator operator-(Superoperator a, const Superoperator& b) { return a -= b; }
  friend Superoperator operator*(Complex c, Superoperator s) { return s *= c; }
  friend Superoperator operator*(double c, Superoperator s) { return s *= Complex(c, 0.0); }

 private:
  int dim_ = 0;
  Matrix mat_;
};

struct ChoiMatrix {
  int dim_in = 0;
  int dim_out = 0;
  Matrix mat;  // (dim_in * dim_out) square, Hermitian for Hermiticity-preserving maps
};

// Γ[M] = Σ_x A^{(x)} M A^{(x)†}
Superoperator kraus_to_transfer(const KrausFamily& family);
Superoperator kraus_to_transfer(const std::vector<Matrix>& ops);

ChoiMatrix choi_of(const Superoperator& s);
bool is_cp(const Superoperator& s, double tol = 1e-10);

// Kraus operators of a PSD Choi matrix; eigenvalues below tol are dropped.
// Throws if the Choi is not PSD beyond tol.
std::vector<Matrix> choi_to_kraus(const ChoiMatrix& c, double tol = 1e-10);

Superoperator expm_apply(const Superoperator& s, double t);

// Random family with `n_ops` operators satisfying Σ A A† = 1, via a Haar-ish
// isometry row block.
KrausFamily random_kraus_family(int dim, int n_ops, std::uint64_t seed);

}  // namespace stochmps

#endif
