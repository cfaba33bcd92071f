#include "stochmps/projection.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace stochmps {

namespace {

int ipow(int base, int exp) {
  int r = 1;
  while (exp-- > 0) r *= base;
  return r;
}

}  // namespace

Superoperator ProjectionFamily::m_ij(int i, int j) const {
  Superoperator s(n_in);
  for (int k = 0; k < rank(); ++k)
    s += Superoperator::sandwich(blocks[i][k], blocks[j][k].adjoint());
  return s;
}

Matrix ProjectionFamily::effect(int i, int j) const {
  Matrix acc = Matrix::Zero(n_in, n_in);
  for (int k = 0; k < rank(); ++k) acc += blocks[i][k] * blocks[j][k].adjoint();
  return acc;
}

double ProjectionFamily::normalization_residual() const {
  Matrix acc = Matrix::Zero(n_in, n_in);
  for (int j = 0; j < n_out; ++j) acc += effect(j, j);
  return (acc - Matrix::Identity(n_in, n_in)).cwiseAbs().maxCoeff();
}

Matrix assemble_choi(const RawFamily& m) {
  const int n_out = static_cast<int>(m.size());
  const int n_in = m.front().front().dim();
  const int block = n_in * n_in;  // (a, α) per system index
  Matrix choi = Matrix::Zero(n_out * block, n_out * block);
  Matrix unit = Matrix::Zero(n_in, n_in);
  for (int i = 0; i < n_out; ++i)
    for (int j = 0; j < n_out; ++j)
      for (int alpha = 0; alpha < n_in; ++alpha)
        for (int beta = 0; beta < n_in; ++beta) {
          unit(alpha, beta) = 1.0;
          Matrix img = m[i][j].apply(unit);
          unit(alpha, beta) = 0.0;
          for (int a = 0; a < n_in; ++a)
            for (int b = 0; b < n_in; ++b)
              choi(i * block + a * n_in + alpha, j * block + b * n_in + beta) = img(a, b);
        }
  return choi;
}

RawFamily family_superoperators(const ProjectionFamily& fam) {
  RawFamily m(fam.n_out, std::vector<Superoperator>(fam.n_out, Superoperator(fam.n_in)));
  for (int i = 0; i < fam.n_out; ++i)
    for (int j = 0; j < fam.n_out; ++j) m[i][j] = fam.m_ij(i, j);
  return m;
}

std::string FamilyValidation::summary() const {
  std::ostringstream os;
  os << (pass ? "pass" : "fail") << " choi_min_eig=" << choi_min_eigenvalue
     << " trace_residual=" << trace_condition_residual
     << " hermiticity_residual=" << hermiticity_residual;
  return os.str();
}

FamilyValidation validate_family(const RawFamily& m, double tol) {
  FamilyValidation v;
  Matrix choi = assemble_choi(m);
  v.hermiticity_residual = hermiticity_residual(choi);
  v.choi_min_eigenvalue = min_eigenvalue(choi);
  const int n_out = static_cast<int>(m.size());
  const int n_in = m.front().front().dim();
  Matrix acc = Matrix::Zero(n_in, n_in);
  for (int j = 0; j < n_out; ++j) acc += m[j][j].apply(Matrix::Identity(n_in, n_in));
  v.trace_condition_residual = (acc - Matrix::Identity(n_in, n_in)).cwiseAbs().maxCoeff();
  v.pass = v.choi_min_eigenvalue >= -tol && v.trace_condition_residual <= tol &&
           v.hermiticity_residual <= tol;
  return v;
}

ProjectionFamily canonicalize(const RawFamily& m, double tol) {
  FamilyValidation v = validate_family(m, tol);
  if (v.choi_min_eigenvalue < -tol)
    throw std::invalid_argument("canonicalize: family Choi matrix is not PSD");
  Matrix choi = assemble_choi(m);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (choi + choi.adjoint().eval()));
  const int n_out = static_cast<int>(m.size());
  const int n_in = m.front().front().dim();
  const int block = n_in * n_in;
  ProjectionFamily fam;
  fam.n_out = n_out;
  fam.n_in = n_in;
  fam.blocks.assign(n_out, {});
  for (Eigen::Index k = es.eigenvalues().size() - 1; k >= 0; --k) {
    double ev = es.eigenvalues()(k);
    if (ev <= tol) continue;
    Vector x = std::sqrt(ev) * es.eigenvectors().col(k);
    for (int i = 0; i < n_out; ++i) {
      Matrix a(n_in, n_in);
      for (int row = 0; row < n_in; ++row)
        for (int col = 0; col < n_in; ++col) a(row, col) = x(i * block + row * n_in + col);
      fam.blocks[i].push_back(std::move(a));
    }
  }
  return fam;
}

double reassembly_residual(const ProjectionFamily& fam, const RawFamily& m) {
  double worst = 0.0;
  for (int i = 0; i < fam.n_out; ++i)
    for (int j = 0; j < fam.n_out; ++j)
      worst = std::max(worst,
                       (fam.m_ij(i, j).matrix() - m[i][j].matrix()).cwiseAbs().maxCoeff());
  return worst;
}

Matrix project_state(const ProjectionFamily& fam, const Matrix& sigma) {
  if (!is_psd(sigma, 1e-8) || std::abs(sigma.trace().real() - 1.0) > 1e-8)
    throw std::invalid_argument("project_state: sigma must be a density matrix");
  Matrix rho(fam.n_out, fam.n_out);
  for (int i = 0; i < fam.n_out; ++i)
    for (int j = 0; j < fam.n_out; ++j) rho(i, j) = (sigma * fam.effect(i, j)).trace();
  return rho;
}

std::vector<Matrix> evolve_projected(const ProjectionFamily& fam, const LindbladGenerator& g,
                                     const Matrix& rho_t0, const std::vector<double>& t_grid) {
  for (std::size_t k = 1; k < t_grid.size(); ++k)
    if (t_grid[k] <= t_grid[k - 1])
      throw std::invalid_argument("evolve_projected: grid must be increasing");
  Superoperator schrodinger = build_L0(g).adjoint();
  std::vector<Matrix> out;
  for (double t : t_grid) {
    Matrix evolved = expm_apply(schrodinger, t).apply(rho_t0);
    evolved = 0.5 * (evolved + evolved.adjoint().eval());
    out.push_back(project_state(fam, evolved));
  }
  return out;
}

Complex MultiTimeTensor::at(const std::vector<int>& pair_indices) const {
  const int base = n_out * n_out;
  std::size_t idx = 0;
  for (int p : pair_indices) idx = idx * base + p;
  return values.at(idx);
}

MultiTimeTensor MultiTimeTensor::trace_last() const {
  MultiTimeTensor out;
  out.n_out = n_out;
  out.n_times = n_times - 1;
  const int base = n_out * n_out;
  out.values.assign(values.size() / base, Complex(0.0));
  for (std::size_t idx = 0; idx < out.values.size(); ++idx)
    for (int d = 0; d < n_out; ++d) out.values[idx] += values[idx * base + d * n_out + d];
  return out;
}

MultiTimeTensor multitime_joint(const ProjectionFamily& fam, const Superoperator& transfer,
                                const Matrix& rho, int n_times) {
  const int base = fam.n_out * fam.n_out;
  const std::size_t total = static_cast<std::size_t>(ipow(base, n_times));
  if (total > (1u << 24)) throw std::invalid_argument("multitime_joint: tensor too large");
  MultiTimeTensor out;
  out.n_out = fam.n_out;
  out.n_times = n_times;
  out.values.assign(total, Complex(0.0));

  RawFamily m = family_superoperators(fam);
  Matrix one = Matrix::Identity(fam.n_in, fam.n_in);
  std::vector<int> pairs(n_times, 0);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    for (int t = n_times - 1; t >= 0; --t) {
      pairs[t] = static_cast<int>(rem % base);
      rem /= base;
    }
    Matrix y = one;
    for (int t = n_times - 1; t >= 0; --t) {
      y = m[pairs[t] / fam.n_out][pairs[t] % fam.n_out].apply(y);
      if (t > 0) y = transfer.apply(y);
    }
    out.values[idx] = (rho * y).trace();
  }
  return out;
}

ProjectionFamily random_projection_family(int n_out, int n_in, int rank, std::uint64_t seed) {
  const int block = n_in * n_in;
  const int dim = n_out * block;
  Matrix g = random_matrix(dim, rank, seed);
  Matrix choi = g * g.adjoint();
  // Normalize the trace condition Σ_j M_jj[1] = 1: S(a,b) = Σ_{j,α}
  // C[(j,a,α),(j,b,α)], then conjugate the map-out leg by S^{-1/2}.
  Matrix s = Matrix::Zero(n_in, n_in);
  for (int j = 0; j < n_out; ++j)
    for (int alpha = 0; alpha < n_in; ++alpha)
      for (int a = 0; a < n_in; ++a)
        for (int b = 0; b < n_in; ++b)
          s(a, b) += choi(j * block + a * n_in + alpha, j * block + b * n_in + alpha);
  Matrix s_inv_half = inv_sqrt_psd(s);
  Matrix scale = kron(Matrix::Identity(n_out, n_out), kron(s_inv_half, Matrix::Identity(n_in, n_in)));
  choi = scale * choi * scale.adjoint();

  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (choi + choi.adjoint().eval()));
  ProjectionFamily fam;
  fam.n_out = n_out;
  fam.n_in = n_in;
  fam.blocks.assign(n_out, {});
  for (Eigen::Index k = es.eigenvalues().size() - 1; k >= 0; --k) {
    double ev = es.eigenvalues()(k);
    if (ev <= 1e-12) continue;
    Vector x = std::sqrt(ev) * es.eigenvectors().col(k);
    for (int i = 0; i < n_out; ++i) {
      Matrix a(n_in, n_in);
      for (int row = 0; row < n_in; ++row)
        for (int col = 0; col < n_in; ++col) a(row, col) = x(i * block + row * n_in + col);
      fam.blocks[i].push_back(std::move(a));
    }
  }
  return fam;
}

}  // namespace stochmps
