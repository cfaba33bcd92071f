#include "stochmps/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include "stochmps/rng.hpp"

namespace stochmps {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Vector vectorize(const Matrix& m) {
  Vector v(m.size());
  Eigen::Index idx = 0;
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) v(idx++) = m(r, c);
  return v;
}

Matrix unvectorize(const Vector& v, int rows, int cols) {
  Matrix m(rows, cols);
  Eigen::Index idx = 0;
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = v(idx++);
  return m;
}

double hermiticity_residual(const Matrix& m) {
  return (m - m.adjoint().eval()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const Matrix& m, double tol) {
  return m.rows() == m.cols() && hermiticity_residual(m) <= tol;
}

double min_eigenvalue(const Matrix& m) {
  Matrix h = 0.5 * (m + m.adjoint().eval());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_psd(const Matrix& m, double tol) {
  return is_hermitian(m, tol) && min_eigenvalue(m) >= -tol;
}

Matrix sqrt_psd(const Matrix& m, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint().eval()));
  Vector d(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    double ev = es.eigenvalues()(i);
    d(i) = ev < floor ? 0.0 : std::sqrt(ev);
  }
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

Matrix inv_sqrt_psd(const Matrix& m, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint().eval()));
  Vector d(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    double ev = es.eigenvalues()(i);
    d(i) = ev < floor ? 0.0 : 1.0 / std::sqrt(ev);
  }
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

Matrix expm(const Matrix& m) { return m.exp(); }

Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = Complex(rng.normal(), rng.normal());
  return m;
}

Matrix random_density(int dim, std::uint64_t seed) {
  Matrix g = random_matrix(dim, dim, seed);
  Matrix rho = g * g.adjoint();
  return rho / rho.trace();
}

Matrix random_hermitian(int dim, std::uint64_t seed) {
  Matrix g = random_matrix(dim, dim, seed);
  return 0.5 * (g + g.adjoint().eval());
}

}  // namespace stochmps
