#include "stochmps/channel.hpp"

#include <stdexcept>

#include <Eigen/QR>

namespace stochmps {

double KrausFamily::normalization_residual() const {
  if (ops.empty()) return 0.0;
  Matrix acc = Matrix::Zero(dim(), dim());
  for (const auto& a : ops) acc += a * a.adjoint();
  return (acc - Matrix::Identity(dim(), dim())).cwiseAbs().maxCoeff();
}

void KrausFamily::check_dims() const {
  for (const auto& a : ops)
    if (a.rows() != dim() || a.cols() != dim())
      throw std::invalid_argument("KrausFamily: operators must share a square dimension");
}

Superoperator::Superoperator(Matrix mat, int dim) : dim_(dim), mat_(std::move(mat)) {
  if (mat_.rows() != dim * dim || mat_.cols() != dim * dim)
    throw std::invalid_argument("Superoperator: matrix must be dim^2 x dim^2");
}

Superoperator Superoperator::identity(int dim) {
  return Superoperator(Matrix::Identity(dim * dim, dim * dim), dim);
}

Superoperator Superoperator::sandwich(const Matrix& a, const Matrix& b) {
  return Superoperator(kron(b.transpose(), a), static_cast<int>(a.rows()));
}

Superoperator Superoperator::left_mult(const Matrix& a) {
  return sandwich(a, Matrix::Identity(a.rows(), a.cols()));
}

Superoperator Superoperator::right_mult(const Matrix& a) {
  return sandwich(Matrix::Identity(a.rows(), a.cols()), a);
}

Matrix Superoperator::apply(const Matrix& m) const {
  if (m.rows() != dim_ || m.cols() != dim_)
    throw std::invalid_argument("Superoperator::apply: dimension mismatch");
  return unvectorize(mat_ * vectorize(m), dim_, dim_);
}

Superoperator Superoperator::compose(const Superoperator& inner) const {
  if (inner.dim_ != dim_) throw std::invalid_argument("Superoperator::compose: dimension mismatch");
  return Superoperator(mat_ * inner.mat_, dim_);
}

Superoperator& Superoperator::operator+=(const Superoperator& o) {
  if (o.dim_ != dim_) throw std::invalid_argument("Superoperator: dimension mismatch");
  mat_ += o.mat_;
  return *this;
}

Superoperator& Superoperator::operator-=(const Superoperator& o) {
  if (o.dim_ != dim_) throw std::invalid_argument("Superoperator: dimension mismatch");
  mat_ -= o.mat_;
  return *this;
}

Superoperator& Superoperator::operator*=(Complex c) {
  mat_ *= c;
  return *this;
}

Superoperator kraus_to_transfer(const std::vector<Matrix>& ops) {
  if (ops.empty()) throw std::invalid_argument("kraus_to_transfer: empty family");
  const int d = static_cast<int>(ops.front().rows());
  Matrix acc = Matrix::Zero(d * d, d * d);
  for (const auto& a : ops) {
    if (a.rows() != d || a.cols() != d)
      throw std::invalid_argument("kraus_to_transfer: dimension mismatch among operators");
    acc += kron(a.conjugate(), a);  // vec(A M A†) = (conj(A) ⊗ A) vec(M)
  }
  return Superoperator(std::move(acc), d);
}

Superoperator kraus_to_transfer(const KrausFamily& family) {
  family.check_dims();
  return kraus_to_transfer(family.ops);
}

ChoiMatrix choi_of(const Superoperator& s) {
  const int d = s.dim();
  ChoiMatrix c{d, d, Matrix::Zero(d * d, d * d)};
  Matrix unit = Matrix::Zero(d, d);
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      unit(a, b) = 1.0;
      c.mat.block(a * d, b * d, d, d) = s.apply(unit);
      unit(a, b) = 0.0;
    }
  }
  return c;
}

bool is_cp(const Superoperator& s, double tol) {
  return min_eigenvalue(choi_of(s).mat) >= -tol;
}

std::vector<Matrix> choi_to_kraus(const ChoiMatrix& c, double tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (c.mat + c.mat.adjoint().eval()));
  if (es.eigenvalues().minCoeff() < -tol)
    throw std::invalid_argument("choi_to_kraus: Choi matrix is not PSD within tolerance");
  std::vector<Matrix> ops;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    double ev = es.eigenvalues()(k);
    if (ev <= tol) continue;
    ops.push_back(unvectorize(std::sqrt(ev) * es.eigenvectors().col(k), c.dim_out, c.dim_in));
  }
  return ops;
}

Superoperator expm_apply(const Superoperator& s, double t) {
  if (!std::isfinite(t)) throw std::invalid_argument("expm_apply: t must be finite");
  return Superoperator(expm((t * s.matrix()).eval()), s.dim());
}

KrausFamily random_kraus_family(int dim, int n_ops, std::uint64_t seed) {
  // QR of a tall random block gives an isometry V (n_ops*dim x dim) with
  // V†V = 1; its row blocks B_x satisfy Σ B_x† B_x = 1, so A_x = B_x† works.
  Matrix g = random_matrix(dim * n_ops, dim, seed);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(dim * n_ops, dim);
  KrausFamily fam;
  for (int x = 0; x < n_ops; ++x)
    fam.ops.push_back(q.block(x * dim, 0, dim, dim).adjoint());
  return fam;
}

}  // namespace stochmps
