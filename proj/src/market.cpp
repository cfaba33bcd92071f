#include "stochmps/market.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "stochmps/rng.hpp"

namespace stochmps {

Superoperator closure_map(const MarketCase1& c) {
  return build_L0(c.g) + (c.alpha - c.r) * coupling_superop(c.R);
}

Superoperator closure_map(const MarketCase2& c) {
  return build_L0(c.g) + (c.alpha - c.r + c.sigma * c.m) * Superoperator::identity(c.g.dim()) +
         c.sigma * coupling_superop(c.R);
}

std::string ClosureSolution::summary() const {
  std::ostringstream os;
  if (!found) {
    os << "no solution (smallest singular value " << smallest_sv << ")";
  } else {
    os << "kernel_dim=" << kernel_dim << " residual=" << residual
       << (psd ? " (PSD)" : " (indefinite)");
  }
  return os.str();
}

namespace {

double map_residual(const Superoperator& map, const Matrix& x) {
  return map.apply(x).cwiseAbs().maxCoeff();
}

// Hermitian kernel elements spanned by a complex null-space basis. The
// condition maps X† solutions to solutions, so Hermitian combinations stay in
// the kernel; re-orthonormalize under the real HS inner product.
std::vector<Matrix> hermitian_kernel_basis(const std::vector<Matrix>& kernel) {
  std::vector<Matrix> herm;
  auto add = [&](Matrix cand) {
    for (const auto& h : herm) {
      Complex overlap = (h.adjoint() * cand).trace();
      cand -= overlap.real() * h;
    }
    double norm = std::sqrt(std::abs((cand.adjoint() * cand).trace().real()));
    if (norm > 1e-8) herm.push_back(cand / norm);
  };
  for (const auto& v : kernel) {
    add(0.5 * (v + v.adjoint().eval()));
    add((0.5 / kImag) * (v - v.adjoint().eval()));
  }
  return herm;
}

}  // namespace

ClosureSolution solve_closure(const Superoperator& map, double tol) {
  const int dim = map.dim();
  Eigen::JacobiSVD<Matrix> svd(map.matrix(), Eigen::ComputeFullV);
  ClosureSolution sol;
  sol.smallest_sv = svd.singularValues().minCoeff();
  double scale = std::max(1.0, svd.singularValues().maxCoeff());
  std::vector<Matrix> kernel;
  for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k)
    if (svd.singularValues()(k) <= tol * scale)
      kernel.push_back(unvectorize(svd.matrixV().col(k), dim, dim));
  if (kernel.empty()) return sol;

  std::vector<Matrix> herm = hermitian_kernel_basis(kernel);
  if (herm.empty()) return sol;
  sol.kernel_dim = static_cast<int>(herm.size());
  sol.found = true;

  // PSD screening: signs for 1-dim kernels, an angle grid for 2-dim ones.
  auto consider = [&](const Matrix& cand) -> bool {
    Matrix best = min_eigenvalue(cand) >= min_eigenvalue((-cand).eval()) ? cand : -cand;
    double tr = best.trace().real();
    if (min_eigenvalue(best) >= -1e-9 && tr > 1e-12) {
      sol.X = best / tr;
      sol.psd = true;
      return true;
    }
    return false;
  };
  bool have_psd = false;
  if (herm.size() == 1) {
    have_psd = consider(herm[0]);
  } else {
    // scan pairwise mixtures over an angle grid
    const int grid = 360;
    for (std::size_t i = 0; i < herm.size() && !have_psd; ++i)
      for (std::size_t j = i + 1; j < herm.size() && !have_psd; ++j)
        for (int a = 0; a < grid && !have_psd; ++a) {
          double th = a * M_PI / grid;
          have_psd = consider(std::cos(th) * herm[i] + std::sin(th) * herm[j]);
        }
    if (!have_psd)
      for (std::size_t i = 0; i < herm.size() && !have_psd; ++i) have_psd = consider(herm[i]);
  }
  if (!have_psd) {
    Matrix x = herm.front();
    double tr = x.trace().real();
    sol.X = std::abs(tr) > 1e-9 ? (x / tr).eval() : x;
    sol.psd = false;
  }
  sol.residual = map_residual(map, sol.X);
  return sol;
}

ClosureSolution solve_closure(const MarketCase1& c, double tol) {
  return solve_closure(closure_map(c), tol);
}

ClosureSolution solve_closure(const MarketCase2& c, double tol) {
  return solve_closure(closure_map(c), tol);
}

namespace {

std::vector<int> record_steps(const std::vector<double>& record_times, double dt) {
  std::vector<int> steps;
  for (double t : record_times) {
    int k = static_cast<int>(std::llround(t / dt));
    if (std::abs(k * dt - t) > 1e-9)
      throw std::invalid_argument("market simulation: record times must be multiples of dt");
    steps.push_back(k);
  }
  return steps;
}

}  // namespace

MarketPaths simulate_market(const MarketCase1& c, const std::vector<double>& record_times,
                            double dt, int n_paths, std::uint64_t seed, int n_threads) {
  if (!c.X) throw std::invalid_argument("simulate_market: closure X must be attached");
  const int dim = c.g.dim();
  Matrix gen = (build_L0(c.g) + c.alpha * Superoperator::identity(dim)).matrix();
  Matrix noise = (c.sigma * coupling_superop(c.R)).matrix();
  Matrix a0 = Matrix::Identity(dim * dim, dim * dim) + dt * gen.adjoint();
  Matrix a1 = noise.adjoint();
  Vector rho_vec = vectorize(c.rho);
  Vector x_vec = vectorize(*c.X);
  const double theta = (c.alpha - c.r) / c.sigma;

  MarketPaths out;
  out.times = record_times;
  std::vector<int> steps = record_steps(record_times, dt);
  int total_steps = steps.empty() ? 0 : *std::max_element(steps.begin(), steps.end());
  for (double t : record_times) out.discount.push_back(std::exp(-c.r * t));
  out.stock.assign(record_times.size(), std::vector<double>(n_paths));
  out.z.assign(record_times.size(), std::vector<double>(n_paths));

  const double sqrt_dt = std::sqrt(dt);
  parallel_for(n_paths, n_threads, [&](std::int64_t path) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(path));
    Vector u = rho_vec;
    Vector tmp(u.size());
    double b = 0.0;
    std::size_t next = 0;
    auto record_if_due = [&](int k) {
      while (next < steps.size() && steps[next] == k) {
        out.stock[next][path] = u.dot(x_vec).real();
        out.z[next][path] = std::exp(-theta * b - 0.5 * theta * theta * (k * dt));
        ++next;
      }
    };
    record_if_due(0);
    for (int k = 1; k <= total_steps; ++k) {
      double db = sqrt_dt * rng.normal();
      tmp.noalias() = a0 * u;
      tmp.noalias() += db * (a1 * u);
      u.swap(tmp);
      b += db;
      record_if_due(k);
    }
  });
  return out;
}

MarketPaths simulate_market(const MarketCase2& c, const std::vector<double>& record_times,
                            double dt, int n_paths, std::uint64_t seed, int n_threads) {
  if (!c.X) throw std::invalid_argument("simulate_market: closure X must be attached");
  const int dim = c.g.dim();
  Matrix gen = build_L0(c.g).matrix();
  Matrix noise =
      (coupling_superop(c.R) + c.m * Superoperator::identity(dim)).matrix();
  Matrix a0 = Matrix::Identity(dim * dim, dim * dim) + dt * gen.adjoint();
  Matrix a1 = noise.adjoint();
  Vector rho_vec = vectorize(c.rho);
  Vector x_vec = vectorize(*c.X);
  // Case-2 theorem integrand 𝒵(t) = Tr(ρ Ẑ[(R[X]+[X]R† + (m+σ)X)])
  Vector zcal_vec = vectorize(
      (coupling_superop(c.R).apply(*c.X) + (c.m + c.sigma) * *c.X).eval());

  MarketPaths out;
  out.times = record_times;
  std::vector<int> steps = record_steps(record_times, dt);
  int total_steps = steps.empty() ? 0 : *std::max_element(steps.begin(), steps.end());
  for (double t : record_times) out.discount.push_back(std::exp(-c.r * t));
  out.stock.assign(record_times.size(), std::vector<double>(n_paths));
  out.z.assign(record_times.size(), std::vector<double>(n_paths));
  out.zcal.assign(record_times.size(), std::vector<double>(n_paths));

  const double sqrt_dt = std::sqrt(dt);
  std::vector<int> nonpositive(n_paths, 0);
  parallel_for(n_paths, n_threads, [&](std::int64_t path) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(path));
    Vector u = rho_vec;
    Vector tmp(u.size());
    double s = c.s0;
    bool bad = false;
    std::size_t next = 0;
    auto record_if_due = [&](int k) {
      while (next < steps.size() && steps[next] == k) {
        double zv = u.dot(x_vec).real();
        if (zv <= 0.0) bad = true;
        out.stock[next][path] = s;
        out.z[next][path] = zv;
        out.zcal[next][path] = u.dot(zcal_vec).real();
        ++next;
      }
    };
    record_if_due(0);
    for (int k = 1; k <= total_steps; ++k) {
      double db = sqrt_dt * rng.normal();
      tmp.noalias() = a0 * u;
      tmp.noalias() += db * (a1 * u);
      u.swap(tmp);
      s += c.alpha * dt + c.sigma * db;
      record_if_due(k);
    }
    nonpositive[path] = bad ? 1 : 0;
  });
  for (int flag : nonpositive) out.n_nonpositive_z += flag;
  return out;
}

double MartingaleReport::max_abs_z() const {
  double worst = 0.0;
  for (const auto& row : rows) worst = std::max(worst, std::abs(row.z));
  return worst;
}

namespace {

MartingaleReport check_from_paths(const MarketPaths& paths) {
  MartingaleReport rep;
  rep.n_nonpositive_z = paths.n_nonpositive_z;
  const int n_paths = static_cast<int>(paths.stock.front().size());
  for (std::size_t t = 0; t < paths.times.size(); ++t) {
    double sum = 0.0, sum2 = 0.0;
    for (int p = 0; p < n_paths; ++p) {
      double v = paths.discount[t] * paths.stock[t][p] * paths.z[t][p];
      sum += v;
      sum2 += v * v;
    }
    MartingaleRow row;
    row.t = paths.times[t];
    row.mean = sum / n_paths;
    row.se = std::sqrt(std::max(0.0, sum2 / n_paths - row.mean * row.mean) / n_paths);
    rep.rows.push_back(row);
  }
  rep.baseline = rep.rows.front().mean;  // t = 0 value is deterministic
  for (auto& row : rep.rows) row.z = row.se > 0 ? (row.mean - rep.baseline) / row.se : 0.0;
  return rep;
}

}  // namespace

MartingaleReport martingale_check(const MarketCase1& c, const std::vector<double>& times,
                                  double dt, int n_paths, std::uint64_t seed, int n_threads) {
  std::vector<double> with_zero = times;
  if (with_zero.empty() || with_zero.front() != 0.0) with_zero.insert(with_zero.begin(), 0.0);
  return check_from_paths(simulate_market(c, with_zero, dt, n_paths, seed, n_threads));
}

MartingaleReport martingale_check(const MarketCase2& c, const std::vector<double>& times,
                                  double dt, int n_paths, std::uint64_t seed, int n_threads) {
  std::vector<double> with_zero = times;
  if (with_zero.empty() || with_zero.front() != 0.0) with_zero.insert(with_zero.begin(), 0.0);
  return check_from_paths(simulate_market(c, with_zero, dt, n_paths, seed, n_threads));
}

std::string ThermoLimitReport::summary() const {
  std::ostringstream os;
  if (!feasible) return "infeasible: no joint kernel of the closure condition and L0";
  os << "closure_residual=" << closure_residual << " l0_residual=" << l0_residual
     << " proportionality_residual=" << proportionality_residual
     << " em_error=" << girsanov_em_error << " lag1_z=" << lag1_z;
  return os.str();
}

ThermoLimitReport thermodynamic_limit_check(const MarketCase2& c, double t_final, double dt,
                                            int n_paths, std::uint64_t seed, int n_threads) {
  ThermoLimitReport rep;
  const int dim = c.g.dim();
  Matrix cond = closure_map(c).matrix();
  Matrix l0 = build_L0(c.g).matrix();
  Matrix stacked(cond.rows() + l0.rows(), cond.cols());
  stacked << cond, l0;
  Eigen::JacobiSVD<Matrix> svd(stacked, Eigen::ComputeFullV);
  double scale = std::max(1.0, svd.singularValues().maxCoeff());
  std::vector<Matrix> kernel;
  for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k)
    if (svd.singularValues()(k) <= 1e-8 * scale)
      kernel.push_back(unvectorize(svd.matrixV().col(k), dim, dim));
  std::vector<Matrix> herm = hermitian_kernel_basis(kernel);
  if (herm.empty()) return rep;

  Matrix x = herm.front();
  if (min_eigenvalue((-x).eval()) > min_eigenvalue(x)) x = -x;
  double tr = x.trace().real();
  if (std::abs(tr) > 1e-10) x /= tr;
  rep.feasible = true;
  rep.X = x;
  rep.closure_residual = closure_map(c).apply(x).cwiseAbs().maxCoeff();
  rep.l0_residual = build_L0(c.g).apply(x).cwiseAbs().maxCoeff();

  // On the joint solution space the coupling must act as a scalar on X.
  Matrix kx = coupling_superop(c.R).apply(x);
  Complex lambda = (x.adjoint() * kx).trace() / (x.adjoint() * x).trace();
  rep.coupling_eigenvalue = lambda;
  rep.proportionality_residual = (kx - lambda * x).cwiseAbs().maxCoeff();

  // Simulated Z against the classical Girsanov factor, on shared increments.
  MarketCase2 solved = c;
  solved.X = x;
  const double theta = (c.alpha - c.r) / c.sigma;
  for (int half = 0; half < 2; ++half) {
    double step = half == 0 ? dt : 0.5 * dt;
    MarketPaths paths = simulate_market(solved, {t_final}, step, n_paths, seed, n_threads);
    double z0 = (solved.rho * x).trace().real();
    double err = 0.0;
    // reconstruct B_T per path from the same substream
    for (int p = 0; p < n_paths; ++p) {
      Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(p));
      int steps = static_cast<int>(std::llround(t_final / step));
      double b = 0.0;
      for (int k = 0; k < steps; ++k) b += std::sqrt(step) * rng.normal();
      double z_classical = std::exp(-theta * b - 0.5 * theta * theta * t_final);
      err += std::abs(paths.z[0][p] - z0 * z_classical);
    }
    err /= n_paths;
    (half == 0 ? rep.girsanov_em_error : rep.girsanov_em_error_half_dt) = err;
  }

  // Z-weighted lag-1 autocorrelation of stock increments on a coarse grid.
  const int n_incr = 8;
  std::vector<double> grid;
  for (int k = 0; k <= n_incr; ++k) grid.push_back(t_final * k / n_incr);
  for (double& t : grid) t = std::round(t / dt) * dt;
  MarketPaths paths = simulate_market(solved, grid, dt, n_paths, seed + 1, n_threads);
  double z0 = (solved.rho * x).trace().real();
  std::vector<std::vector<double>> incr(n_incr, std::vector<double>(n_paths));
  for (int k = 0; k < n_incr; ++k)
    for (int p = 0; p < n_paths; ++p)
      incr[k][p] = paths.stock[k + 1][p] - paths.stock[k][p];
  // weighted means per increment
  std::vector<double> mean(n_incr, 0.0);
  double wsum = 0.0;
  std::vector<double> w(n_paths);
  for (int p = 0; p < n_paths; ++p) {
    w[p] = paths.z[n_incr][p] / z0;  // weight by the final-time density
    wsum += w[p];
  }
  for (int k = 0; k < n_incr; ++k) {
    for (int p = 0; p < n_paths; ++p) mean[k] += w[p] * incr[k][p];
    mean[k] /= wsum;
  }
  double cov_sum = 0.0, cov_sum2 = 0.0, var_sum = 0.0;
  long count = 0;
  for (int k = 0; k + 1 < n_incr; ++k)
    for (int p = 0; p < n_paths; ++p) {
      double prod = w[p] * (incr[k][p] - mean[k]) * (incr[k + 1][p] - mean[k + 1]);
      cov_sum += prod;
      cov_sum2 += prod * prod;
      var_sum += w[p] * (incr[k][p] - mean[k]) * (incr[k][p] - mean[k]);
      ++count;
    }
  double cov = cov_sum / count;
  double cov_se = std::sqrt(std::max(0.0, cov_sum2 / count - cov * cov) / count);
  rep.lag1_autocorr = var_sum > 0 ? cov_sum / var_sum : 0.0;
  rep.lag1_se = var_sum > 0 ? cov_se * count / var_sum : 0.0;
  rep.lag1_z = cov_se > 0 ? cov / cov_se : 0.0;
  return rep;
}

MarketCase1 example_case1(bool violate_condition) {
  // D = 2 instance with X = |0><0| in the kernel of the closure map and the
  // discounted reweighted stock exactly driftless: K_R[X] = X/2 and
  // L0[X] = −(α−r)/2 X.
  MarketCase1 c;
  c.alpha = 0.08;
  c.r = 0.03;
  c.sigma = 0.2;
  double jump = std::sqrt(0.5 * (c.alpha - c.r));
  c.g.H = Matrix::Zero(2, 2);
  Matrix r1 = Matrix::Zero(2, 2);
  r1(0, 1) = jump;
  c.g.Rs = {r1};
  c.R = Matrix::Zero(2, 2);
  c.R(0, 0) = 0.25;
  c.R(1, 1) = 0.6;
  c.rho = Matrix::Zero(2, 2);
  c.rho << 0.7, 0.2, 0.2, 0.3;
  Matrix x = Matrix::Zero(2, 2);
  x(0, 0) = 1.0;
  if (violate_condition) x = Matrix::Identity(2, 2);
  c.X = x;
  return c;
}

MarketCase2 example_case2(bool violate_condition) {
  // Negative-rate D = 2 instance: L0[X] = rX and σK[X] = −(α+σm)X with
  // X = |0><0|, which keeps E[Z D S] exactly flat for r ≠ 0.
  MarketCase2 c;
  c.alpha = 0.05;
  c.sigma = 0.25;
  double jump = 0.2;
  c.r = -jump * jump;
  c.g.H = Matrix::Zero(2, 2);
  Matrix r1 = Matrix::Zero(2, 2);
  r1(0, 1) = jump;
  c.g.Rs = {r1};
  c.R = Matrix::Zero(2, 2);
  c.R(0, 0) = 0.3;
  c.R(1, 1) = -0.1;
  c.m = -(c.alpha + 2.0 * c.sigma * 0.3) / c.sigma;
  c.rho = Matrix::Zero(2, 2);
  c.rho << 0.7, 0.2, 0.2, 0.3;
  c.s0 = 1.0;
  Matrix x = Matrix::Zero(2, 2);
  x(0, 0) = 1.0;
  if (violate_condition) x = Matrix::Identity(2, 2);
  c.X = x;
  return c;
}

MarketCase2 example_case2_thermo(bool feasible) {
  MarketCase2 c;
  c.alpha = 0.04;
  c.r = 0.0;
  c.sigma = 0.3;
  c.g.H = Matrix::Zero(2, 2);
  c.g.H << 0.5, 0.0, 0.0, -0.2;
  Matrix r1 = Matrix::Zero(2, 2);
  if (feasible) {
    r1 << 0.4, 0.0, 0.0, 0.7;  // diagonal jump keeps L0[|0><0|] = 0
  } else {
    r1(0, 1) = 0.5;  // off-diagonal jump leaves only X = 1 in ker L0
  }
  c.g.Rs = {r1};
  c.R = Matrix::Zero(2, 2);
  c.R(0, 0) = 0.35;
  c.R(1, 1) = -0.15;
  c.m = -(c.alpha + 2.0 * c.sigma * 0.35) / c.sigma;
  c.rho = Matrix::Zero(2, 2);
  c.rho << 0.8, 0.1, 0.1, 0.2;
  c.s0 = 1.0;
  return c;
}

}  // namespace stochmps
