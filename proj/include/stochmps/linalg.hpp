#ifndef STOCHMPS_LINALG_HPP
#define STOCHMPS_LINALG_HPP

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace stochmps {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kImag{0.0, 1.0};

// Kronecker product, row-major blocks: (A ⊗ B)[(i,k),(j,l)] = A(i,j) B(k,l).
Matrix kron(const Matrix& a, const Matrix& b);

// Column-stacking vectorization: vec(M)[c * rows + r] = M(r, c).
// All superoperator matrices in this library use this convention, so that
// vec(A M B) = (B^T ⊗ A) vec(M).
Vector vectorize(const Matrix& m);
Matrix unvectorize(const Vector& v, int rows, int cols);

double hermiticity_residual(const Matrix& m);
bool is_hermitian(const Matrix& m, double tol = 1e-10);

// Smallest eigenvalue of the Hermitian part of m.
double min_eigenvalue(const Matrix& m);
bool is_psd(const Matrix& m, double tol = 1e-10);

// Principal square root / inverse square root of a Hermitian PSD matrix.
// Eigenvalues below `floor` are clamped (inverse root treats them as absent).
Matrix sqrt_psd(const Matrix& m, double floor = 1e-14);
Matrix inv_sqrt_psd(const Matrix& m, double floor = 1e-14);

Matrix expm(const Matrix& m);

Matrix random_matrix(int rows, int cols, std::uint64_t seed);
Matrix random_density(int dim, std::uint64_t seed);
Matrix random_hermitian(int dim, std::uint64_t seed);

// Classical RK4 with fixed step; f(t, y) -> dy/dt.
template <typename F>
RealVector rk4_integrate(F&& f, RealVector y, double t0, double t1, double dt) {
  double t = t0;
  while (t < t1 - 1e-15) {
    double h = std::min(dt, t1 - t);
    RealVector k1 = f(t, y);
    RealVector k2 = f(t + 0.5 * h, (y + 0.5 * h * k1).eval());
    RealVector k3 = f(t + 0.5 * h, (y + 0.5 * h * k2).eval());
    RealVector k4 = f(t + h, (y + h * k3).eval());
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  }
  return y;
}

}  // namespace stochmps

#endif
