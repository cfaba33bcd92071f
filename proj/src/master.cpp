#include "stochmps/master.hpp"

#include <cmath>
#include <stdexcept>

namespace stochmps {

Matrix lindblad_q(const LindbladGenerator& g) {
  if (!is_hermitian(g.H, 1e-10))
    throw std::invalid_argument("lindblad_q: H must be Hermitian");
  Matrix q = kImag * g.H;
  for (const auto& r : g.Rs) q -= 0.5 * r * r.adjoint();
  return q;
}

Superoperator build_L0(const LindbladGenerator& g) {
  Matrix q = lindblad_q(g);
  Superoperator l = Superoperator::left_mult(q) + Superoperator::right_mult(q.adjoint());
  for (const auto& r : g.Rs) l += Superoperator::sandwich(r, r.adjoint());
  return l;
}

namespace {

void check_rate_matrix(const RealMatrix& g) {
  if (g.rows() != g.cols()) throw std::invalid_argument("rate matrix must be square");
  for (int c = 0; c < g.cols(); ++c) {
    double colsum = g.col(c).sum();
    if (std::abs(colsum) > 1e-9)
      throw std::invalid_argument("rate matrix must have zero column sums");
    for (int r = 0; r < g.rows(); ++r)
      if (r != c && g(r, c) < -1e-12)
        throw std::invalid_argument("rate matrix must have nonnegative off-diagonals");
  }
}

}  // namespace

RealVector classical_master_reference(const RealMatrix& g, const RealVector& p0, double t) {
  check_rate_matrix(g);
  Matrix e = expm((t * g.cast<Complex>()).eval());
  return (e * p0.cast<Complex>()).real();
}

RealVector classical_master_rk4(const RealMatrix& g, const RealVector& p0, double t, double dt) {
  check_rate_matrix(g);
  return rk4_integrate([&](double, const RealVector& p) { return (g * p).eval(); }, p0, 0.0, t,
                       dt);
}

RealVector discrete_marginal_evolution(const StochasticMPS& s, int n) {
  if (n < 1 || n > s.n_sites)
    throw std::invalid_argument("discrete_marginal_evolution: index out of range");
  const int d2 = s.bond_dim() * s.bond_dim();
  // evolution of the first n-1 sites as a product of superoperator matrices
  Matrix evolution = Matrix::Identity(d2, d2);
  for (int j = 0; j < n - 1; ++j)
    evolution = s.site(j).transfer().adjoint().matrix() * evolution;
  Matrix dressing = Matrix::Identity(d2, d2);
  for (int j = s.n_sites - 1; j >= n; --j)
    dressing = s.site(j).transfer().matrix() * dressing;
  Vector closure_vec = dressing * vectorize(s.closure);
  Vector rho_vec = evolution * vectorize(s.rho);
  RealVector p(s.d());
  for (int x = 0; x < s.d(); ++x) {
    // Tr(M E) = vec(M)† vec(E) for the Hermitian evolved state M
    Vector v = s.site(n - 1).symbol_transfer(x).adjoint().matrix() * rho_vec;
    p(x) = v.dot(closure_vec).real();
  }
  return p;
}

Superoperator MarginalRateFamily::total() const {
  if (parts.empty()) throw std::invalid_argument("MarginalRateFamily: empty");
  Superoperator acc = parts.front();
  for (std::size_t k = 1; k < parts.size(); ++k) acc += parts[k];
  return acc;
}

double MarginalRateFamily::decomposition_residual(const Superoperator& l) const {
  return (total().matrix() - l.matrix()).cwiseAbs().maxCoeff();
}

RealVector continuous_marginal_rates(const Superoperator& l, const MarginalRateFamily& s,
                                     const Matrix& rho, double t) {
  if (s.decomposition_residual(l) > 1e-9)
    throw std::invalid_argument("continuous_marginal_rates: parts do not sum to the generator");
  Superoperator propagated = expm_apply(l, t);
  const int dim = l.dim();
  Matrix one = Matrix::Identity(dim, dim);
  RealVector rates(static_cast<int>(s.parts.size()));
  for (std::size_t k = 0; k < s.parts.size(); ++k)
    rates(static_cast<int>(k)) =
        (rho * propagated.apply(s.parts[k].apply(one))).trace().real();
  return rates;
}

RealVector continuous_marginal_distribution(const Superoperator& l, int n_symbols,
                                            const std::vector<Matrix>& projectors,
                                            const Matrix& rho, double t) {
  Superoperator propagated = expm_apply(l, t);
  RealVector p(n_symbols);
  for (int k = 0; k < n_symbols; ++k)
    p(k) = (rho * propagated.apply(projectors.at(k))).trace().real();
  return p;
}

BirthDeathBlocks classical_birth_death_blocks(const RealVector& lambda, const RealVector& mu) {
  if (lambda.size() != mu.size())
    throw std::invalid_argument("classical_birth_death_blocks: size mismatch");
  BirthDeathBlocks b;
  b.n_max = static_cast<int>(lambda.size()) - 1;
  b.internal_dim = 1;
  for (int m = 0; m <= b.n_max; ++m) {
    double lam = (m < b.n_max) ? lambda(m) : 0.0;  // reflecting truncation
    double dth = (m > 0) ? mu(m) : 0.0;
    b.diag.push_back(Matrix::Constant(1, 1, lam + dth));
    b.birth.push_back(Matrix::Constant(1, 1, std::sqrt(lam)));
    b.death.push_back(Matrix::Constant(1, 1, std::sqrt(dth)));
  }
  return b;
}

BirthDeathGenerator birth_death_generator(const BirthDeathBlocks& blocks, double tol) {
  const int levels = blocks.n_max + 1;
  const int m_dim = blocks.internal_dim;
  const int dim = m_dim * levels;

  auto embed = [&](const Matrix& block, int row_level, int col_level) {
    Matrix out = Matrix::Zero(dim, dim);
    out.block(row_level * m_dim, col_level * m_dim, m_dim, m_dim) = block;
    return out;
  };

  double worst = 0.0;
  for (int m = 0; m <= blocks.n_max; ++m) {
    Matrix lhs = 0.5 * (blocks.diag[m] + blocks.diag[m].adjoint());
    Matrix rhs = Matrix::Zero(m_dim, m_dim);
    if (m < blocks.n_max) rhs += blocks.birth[m].adjoint() * blocks.birth[m];
    if (m > 0) rhs += blocks.death[m].adjoint() * blocks.death[m];
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  BirthDeathGenerator gen;
  gen.consistency_residual = worst;
  if (worst > tol)
    throw std::invalid_argument("birth_death_generator: consistency condition violated");

  // S^{(n)} = Q^{(n)}[.] + [.]Q^{(n)†} + R_up† [.] R_up + R_dn† [.] R_dn, with
  // Q^{(n)} = -½ Ĝ_{n,n} ⊗ |n><n| and the gain operators attached to the
  // symbol the counter lands on.
  for (int n = 0; n <= blocks.n_max; ++n) {
    Matrix q = embed(-0.5 * blocks.diag[n], n, n);
    Superoperator part =
        Superoperator::left_mult(q) + Superoperator::right_mult(q.adjoint());
    if (n > 0) {
      Matrix r = embed(blocks.birth[n - 1], n, n - 1);  // gain from births at n-1
      part += Superoperator::sandwich(r.adjoint(), r);
    }
    if (n < blocks.n_max) {
      Matrix r = embed(blocks.death[n + 1], n, n + 1);  // gain from deaths at n+1
      part += Superoperator::sandwich(r.adjoint(), r);
    }
    gen.rates.parts.push_back(part);
    Matrix proj = Matrix::Zero(dim, dim);
    proj.block(n * m_dim, n * m_dim, m_dim, m_dim) = Matrix::Identity(m_dim, m_dim);
    gen.projectors.push_back(proj);
  }
  gen.total = gen.rates.total();
  return gen;
}

RealMatrix birth_death_rate_matrix(const RealVector& lambda, const RealVector& mu) {
  const int levels = static_cast<int>(lambda.size());
  RealMatrix g = RealMatrix::Zero(levels, levels);
  for (int m = 0; m < levels; ++m) {
    double lam = (m < levels - 1) ? lambda(m) : 0.0;
    double dth = (m > 0) ? mu(m) : 0.0;
    if (m < levels - 1) g(m + 1, m) += lam;
    if (m > 0) g(m - 1, m) += dth;
    g(m, m) -= lam + dth;
  }
  return g;
}

}  // namespace stochmps
