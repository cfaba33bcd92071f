#include "stochmps/smps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "stochmps/rng.hpp"

namespace stochmps {

namespace {

constexpr double kNegativityFloor = -1e-12;

int ipow(int base, int exp) {
  int r = 1;
  while (exp-- > 0) r *= base;
  return r;
}

double real_trace(const Matrix& m) { return m.trace().real(); }

// Trace pairing of an evolved state against a closure.
double pair_with(const Matrix& state, const Matrix& closure) {
  return (state * closure).trace().real();
}

}  // namespace

SiteFamily SiteFamily::from_single(const KrausFamily& f) {
  SiteFamily s;
  for (const auto& a : f.ops) s.kraus.push_back({a});
  return s;
}

int SiteFamily::dim() const {
  for (const auto& maps : kraus)
    if (!maps.empty()) return static_cast<int>(maps.front().rows());
  return 0;
}

Matrix SiteFamily::effect(int x) const {
  Matrix acc = Matrix::Zero(dim(), dim());
  for (const auto& a : kraus.at(x)) acc += a * a.adjoint();
  return acc;
}

Matrix SiteFamily::update(int x, const Matrix& m) const {
  Matrix acc = Matrix::Zero(dim(), dim());
  for (const auto& a : kraus.at(x)) acc += a.adjoint() * m * a;
  return acc;
}

Matrix SiteFamily::propagate(const Matrix& m) const {
  Matrix acc = Matrix::Zero(dim(), dim());
  for (int x = 0; x < n_symbols(); ++x) acc += update(x, m);
  return acc;
}

Matrix SiteFamily::heisenberg(const Matrix& y) const {
  Matrix acc = Matrix::Zero(dim(), dim());
  for (const auto& maps : kraus)
    for (const auto& a : maps) acc += a * y * a.adjoint();
  return acc;
}

Superoperator SiteFamily::transfer() const {
  std::vector<Matrix> all;
  for (const auto& maps : kraus) all.insert(all.end(), maps.begin(), maps.end());
  return kraus_to_transfer(all);
}

Superoperator SiteFamily::symbol_transfer(int x) const {
  return kraus_to_transfer(kraus.at(x));
}

double SiteFamily::normalization_residual() const {
  Matrix acc = Matrix::Zero(dim(), dim());
  for (int x = 0; x < n_symbols(); ++x) acc += effect(x);
  return (acc - Matrix::Identity(dim(), dim())).cwiseAbs().maxCoeff();
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  os << (pass ? "pass" : "fail");
  double worst = 0.0;
  for (double r : site_residuals) worst = std::max(worst, r);
  os << " site_residual_max=" << worst << " rho_trace_residual=" << rho_trace_residual
     << " rho_min_eig=" << rho_min_eigenvalue << " closure_min_eig=" << closure_min_eigenvalue
     << " total_probability=" << total_probability;
  return os.str();
}

ValidationReport validate(const StochasticMPS& s, double tol) {
  ValidationReport rep;
  for (const auto& site : s.sites) rep.site_residuals.push_back(site.normalization_residual());
  rep.rho_trace_residual = std::abs(s.rho.trace().real() - 1.0) + std::abs(s.rho.trace().imag());
  rep.rho_min_eigenvalue = min_eigenvalue(s.rho);
  rep.closure_min_eigenvalue = min_eigenvalue(s.closure);
  rep.total_probability = total_probability(s);
  bool ok = rep.rho_trace_residual <= tol && rep.rho_min_eigenvalue >= -tol &&
            rep.closure_min_eigenvalue >= -tol &&
            hermiticity_residual(s.rho) <= tol;
  for (double r : rep.site_residuals) ok = ok && r <= tol;
  rep.pass = ok;
  return rep;
}

double total_probability(const StochasticMPS& s) {
  Matrix m = s.rho;
  for (int j = 0; j < s.n_sites; ++j) m = s.site(j).propagate(m);
  return pair_with(m, s.closure);
}

double joint_probability(const StochasticMPS& s, const Trajectory& t) {
  if (static_cast<int>(t.size()) != s.n_sites)
    throw std::invalid_argument("joint_probability: trajectory length must equal chain length");
  Matrix m = s.rho;
  for (int j = 0; j < s.n_sites; ++j) {
    if (t[j] < 0 || t[j] >= s.d())
      throw std::invalid_argument("joint_probability: symbol outside alphabet");
    m = s.site(j).update(t[j], m);
  }
  double p = pair_with(m, s.closure);
  if (p < kNegativityFloor)
    throw std::runtime_error("joint_probability: probability below numerical-validity floor");
  return std::clamp(p, 0.0, 1.0);
}

FilterState filter_begin(const StochasticMPS& s) {
  FilterState f;
  f.rho_cond = s.rho / s.rho.trace();
  return f;
}

RealVector predictive_distribution(const FilterState& f, const SiteFamily& site) {
  RealVector p(site.n_symbols());
  for (int x = 0; x < site.n_symbols(); ++x)
    p(x) = (f.rho_cond * site.effect(x)).trace().real();
  return p;
}

FilterState filter_step(const FilterState& f, const SiteFamily& site, int symbol) {
  FilterState next = f;
  if (f.dead) return next;
  Matrix updated = site.update(symbol, f.rho_cond);
  double p = real_trace(updated);
  if (p < 1e-14) {
    next.dead = true;
    next.loglik = -std::numeric_limits<double>::infinity();
    return next;
  }
  next.rho_cond = updated / p;
  next.loglik += std::log(p);
  return next;
}

std::vector<Trajectory> sample_trajectories(const StochasticMPS& s, int n_paths,
                                            std::uint64_t seed, int n_threads) {
  // Backward environments E_j = Γ_{j+1}...Γ_N[X] make the sequential sampler
  // exact for any closure; E_j = 1 throughout when X = 1.
  const int n = s.n_sites, d = s.d();
  std::vector<Matrix> env(n);  // env[j] pairs with the state after site j
  Matrix e = s.closure;
  for (int j = n - 1; j >= 0; --j) {
    env[j] = e;
    e = s.site(j).heisenberg(e);
  }
  // weight of symbol x at site j given state m: Tr(update(x, m) env[j])
  std::vector<std::vector<std::vector<Matrix>>> site_kraus(n);
  for (int j = 0; j < n; ++j) site_kraus[j] = s.site(j).kraus;

  std::vector<Trajectory> out(n_paths);
  parallel_for(n_paths, n_threads, [&](std::int64_t path) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(path));
    Matrix m = s.rho / s.rho.trace();
    Trajectory traj(n);
    std::vector<double> w(d);
    std::vector<Matrix> updates(d);
    for (int j = 0; j < n; ++j) {
      double total = 0.0;
      for (int x = 0; x < d; ++x) {
        updates[x] = s.site(j).update(x, m);
        w[x] = std::max(0.0, pair_with(updates[x], env[j]));
        total += w[x];
      }
      int x = rng.categorical(w.data(), d, total);
      traj[j] = x;
      double norm = real_trace(updates[x]);
      m = norm > 0 ? (updates[x] / norm).eval() : updates[x];
    }
    out[path] = std::move(traj);
  });
  return out;
}

RealVector marginal_at(const StochasticMPS& s, int n) {
  if (n < 1 || n > s.n_sites) throw std::invalid_argument("marginal_at: index out of range");
  Matrix m = s.rho;
  for (int j = 0; j < n - 1; ++j) m = s.site(j).propagate(m);
  Matrix e = s.closure;
  for (int j = s.n_sites - 1; j >= n; --j) e = s.site(j).heisenberg(e);
  RealVector p(s.d());
  for (int x = 0; x < s.d(); ++x) p(x) = pair_with(s.site(n - 1).update(x, m), e);
  return p;
}

RealVector window_joint(const StochasticMPS& s, int first, int len) {
  if (first < 1 || len < 1 || first + len - 1 > s.n_sites)
    throw std::invalid_argument("window_joint: window outside chain");
  Matrix m0 = s.rho;
  for (int j = 0; j < first - 1; ++j) m0 = s.site(j).propagate(m0);
  Matrix e = s.closure;
  for (int j = s.n_sites - 1; j >= first - 1 + len; --j) e = s.site(j).heisenberg(e);

  const int d = s.d();
  RealVector out(ipow(d, len));
  std::vector<int> symbols(len, 0);
  for (Eigen::Index idx = 0; idx < out.size(); ++idx) {
    int rem = static_cast<int>(idx);
    for (int j = len - 1; j >= 0; --j) {
      symbols[j] = rem % d;
      rem /= d;
    }
    Matrix m = m0;
    for (int j = 0; j < len; ++j) m = s.site(first - 1 + j).update(symbols[j], m);
    out(idx) = pair_with(m, e);
  }
  return out;
}

StochasticMPS from_elementwise_positive(const std::vector<RealMatrix>& b, const RealVector& left,
                                        const RealVector& right, int n_sites) {
  if (b.empty()) throw std::invalid_argument("from_elementwise_positive: no symbol matrices");
  const int dim = static_cast<int>(b.front().rows());
  RealMatrix t = RealMatrix::Zero(dim, dim);
  for (const auto& bx : b) {
    if (bx.rows() != dim || bx.cols() != dim)
      throw std::invalid_argument("from_elementwise_positive: inconsistent dimensions");
    if (bx.minCoeff() < -1e-12)
      throw std::invalid_argument("from_elementwise_positive: negative B entry");
    t += bx;
  }
  for (int y = 0; y < dim; ++y)
    if (std::abs(t.row(y).sum() - 1.0) > 1e-9)
      throw std::invalid_argument(
          "from_elementwise_positive: symbol-summed transfer must be row-stochastic");
  if (left.minCoeff() < 0 || right.minCoeff() < 0 || left.sum() <= 0)
    throw std::invalid_argument("from_elementwise_positive: boundaries must be nonnegative");

  SiteFamily site;
  site.kraus.resize(b.size());
  for (std::size_t x = 0; x < b.size(); ++x) {
    for (int y = 0; y < dim; ++y)
      for (int z = 0; z < dim; ++z) {
        double w = b[x](y, z);
        if (w <= 0.0) continue;
        Matrix piece = Matrix::Zero(dim, dim);
        piece(y, z) = std::sqrt(w);
        site.kraus[x].push_back(std::move(piece));
      }
    if (site.kraus[x].empty()) site.kraus[x].push_back(Matrix::Zero(dim, dim));
  }

  StochasticMPS s;
  s.n_sites = n_sites;
  s.sites = {std::move(site)};
  s.rho = (left / left.sum()).cast<Complex>().asDiagonal();
  // Scale the closure so the joint law sums to one for this chain length.
  RealVector w = right;
  for (int j = 0; j < n_sites; ++j) w = t * w;
  double total = left.dot(w) / left.sum();
  if (total <= 0) throw std::invalid_argument("from_elementwise_positive: degenerate total weight");
  s.closure = (right / total).cast<Complex>().asDiagonal();
  s.b_form = ElementwiseForm{b, left, right};
  return s;
}

StochasticMPS markov_embedding(const RealMatrix& t, const RealVector& pi, int n_sites) {
  const int d = static_cast<int>(t.rows());
  if (t.cols() != d) throw std::invalid_argument("markov_embedding: square transition expected");
  for (int c = 0; c < d; ++c)
    if (std::abs(t.col(c).sum() - 1.0) > 1e-9 || t.col(c).minCoeff() < -1e-12)
      throw std::invalid_argument("markov_embedding: transition must be column-stochastic");
  std::vector<RealMatrix> b(d, RealMatrix::Zero(d, d));
  for (int x = 0; x < d; ++x)
    for (int z = 0; z < d; ++z) b[x](x, z) = t(z, x);
  return from_elementwise_positive(b, pi, RealVector::Ones(d), n_sites);
}

StochasticMPS finite_memory_embedding(const RealMatrix& t_ctx, const RealVector& p0_ctx, int d,
                                       int k, int n_sites) {
  const int n_ctx = ipow(d, k);
  if (t_ctx.rows() != n_ctx || t_ctx.cols() != d)
    throw std::invalid_argument("finite_memory_embedding: tensor must be d^k x d");
  for (int y = 0; y < n_ctx; ++y)
    if (std::abs(t_ctx.row(y).sum() - 1.0) > 1e-9 || t_ctx.row(y).minCoeff() < -1e-12)
      throw std::invalid_argument("finite_memory_embedding: rows must be distributions");
  std::vector<RealMatrix> b(d, RealMatrix::Zero(n_ctx, n_ctx));
  for (int y = 0; y < n_ctx; ++y)
    for (int i = 0; i < d; ++i) {
      int z = (y * d + i) % n_ctx;  // drop oldest symbol, append i
      b[i](y, z) = t_ctx(y, i);
    }
  return from_elementwise_positive(b, p0_ctx, RealVector::Ones(n_ctx), n_sites);
}

StochasticMPS gauge_transform(const StochasticMPS& s, const Matrix& g) {
  Matrix g_half = sqrt_psd(g);
  Matrix g_inv_half = inv_sqrt_psd(g);
  StochasticMPS out;
  out.n_sites = s.n_sites;
  for (const auto& site : s.sites) {
    SiteFamily ns;
    ns.kraus.resize(site.kraus.size());
    for (std::size_t x = 0; x < site.kraus.size(); ++x)
      for (const auto& a : site.kraus[x]) ns.kraus[x].push_back(g_inv_half * a * g_half);
    out.sites.push_back(std::move(ns));
  }
  out.rho = g_half * s.rho * g_half;
  out.closure = g_inv_half * s.closure * g_inv_half;
  return out;
}

std::string BlockingReport::summary() const {
  std::ostringstream os;
  os << "blocks=" << n_tuples << " classes=" << n_classes
     << " kraus_rank=" << blocked_kraus_rank
     << " rank_condition=" << (rank_condition_met ? "met" : "unmet")
     << " structure_residual=" << structure_residual
     << " chapman_kolmogorov_residual=" << chapman_kolmogorov_residual;
  return os.str();
}

BlockingReport markovize_by_blocking(const StochasticMPS& s, int block_len) {
  if (!s.b_form)
    throw std::invalid_argument(
        "markovize_by_blocking: chain must carry an element-wise positive form");
  const auto& form = *s.b_form;
  const int d = static_cast<int>(form.b.size());
  const int dim = static_cast<int>(form.b.front().rows());
  BlockingReport rep;
  rep.block_len = block_len;
  rep.n_tuples = ipow(d, block_len);

  // Products of B matrices per blocked tuple, grouped by proportionality.
  std::vector<RealMatrix> products(rep.n_tuples);
  for (int tpl = 0; tpl < rep.n_tuples; ++tpl) {
    RealMatrix m = RealMatrix::Identity(dim, dim);
    int rem = tpl;
    std::vector<int> symbols(block_len);
    for (int j = block_len - 1; j >= 0; --j) {
      symbols[j] = rem % d;
      rem /= d;
    }
    for (int j = 0; j < block_len; ++j) m = m * form.b[symbols[j]];
    products[tpl] = m;
  }
  rep.tuple_class.assign(rep.n_tuples, -1);
  std::vector<RealMatrix> reps;
  const double prop_tol = 1e-9;
  for (int tpl = 0; tpl < rep.n_tuples; ++tpl) {
    double scale = products[tpl].cwiseAbs().maxCoeff();
    if (scale < 1e-14) continue;  // zero-weight tuple
    RealMatrix unit = products[tpl] / scale;
    int found = -1;
    for (std::size_t c = 0; c < reps.size(); ++c)
      if ((unit - reps[c]).cwiseAbs().maxCoeff() < prop_tol) {
        found = static_cast<int>(c);
        break;
      }
    if (found < 0) {
      reps.push_back(unit);
      found = static_cast<int>(reps.size()) - 1;
    }
    rep.tuple_class[tpl] = found;
  }
  rep.n_classes = static_cast<int>(reps.size());

  // Structure check: the blocked transfer map must be the classical embedding
  // of T^L, with Kraus pieces sqrt((T^L)_{y,z}) |y><z|.
  RealMatrix t = RealMatrix::Zero(dim, dim);
  for (const auto& bx : form.b) t += bx;
  RealMatrix t_l = RealMatrix::Identity(dim, dim);
  for (int j = 0; j < block_len; ++j) t_l = t_l * t;
  std::vector<Matrix> classical_kraus;
  for (int y = 0; y < dim; ++y)
    for (int z = 0; z < dim; ++z)
      if (t_l(y, z) > 0) {
        Matrix piece = Matrix::Zero(dim, dim);
        piece(y, z) = std::sqrt(t_l(y, z));
        classical_kraus.push_back(std::move(piece));
      }
  Superoperator site_transfer = s.site(0).transfer();
  Matrix blocked = Matrix::Identity(dim * dim, dim * dim);
  for (int j = 0; j < block_len; ++j) blocked = blocked * site_transfer.matrix();
  rep.structure_residual =
      (blocked - kraus_to_transfer(classical_kraus).matrix()).cwiseAbs().maxCoeff();

  Superoperator blocked_transfer(blocked, dim);
  Eigen::SelfAdjointEigenSolver<Matrix> es(choi_of(blocked_transfer).mat);
  rep.blocked_kraus_rank =
      static_cast<int>((es.eigenvalues().array() > 1e-10).count());
  rep.rank_condition_met = rep.n_tuples >= rep.blocked_kraus_rank;

  // Class process over three consecutive blocks, with the chain's boundaries.
  // The induced transition comes from the first two blocks; the third block
  // tests the Markov (Chapman-Kolmogorov) factorization.
  StochasticMPS three = from_elementwise_positive(form.b, form.left, form.right, 3 * block_len);
  RealVector joint3 = window_joint(three, 1, 3 * block_len);
  const int nt = rep.n_tuples;
  const int nc = rep.n_classes;
  if (nc > 0) {
    std::vector<double> p3(static_cast<std::size_t>(nc) * nc * nc, 0.0);
    for (int a = 0; a < nt; ++a) {
      int ca = rep.tuple_class[a];
      if (ca < 0) continue;
      for (int b2 = 0; b2 < nt; ++b2) {
        int cb = rep.tuple_class[b2];
        if (cb < 0) continue;
        for (int c = 0; c < nt; ++c) {
          int cc = rep.tuple_class[c];
          if (cc < 0) continue;
          p3[static_cast<std::size_t>(ca * nc + cb) * nc + cc] +=
              joint3((static_cast<Eigen::Index>(a) * nt + b2) * nt + c);
        }
      }
    }
    RealVector p1 = RealVector::Zero(nc), p2 = RealVector::Zero(nc);
    RealMatrix p12 = RealMatrix::Zero(nc, nc), p23 = RealMatrix::Zero(nc, nc);
    for (int a = 0; a < nc; ++a)
      for (int b2 = 0; b2 < nc; ++b2)
        for (int c = 0; c < nc; ++c) {
          double v = p3[static_cast<std::size_t>(a * nc + b2) * nc + c];
          p1(a) += v;
          p2(b2) += v;
          p12(a, b2) += v;
          p23(b2, c) += v;
        }
    rep.class_transition = RealMatrix::Zero(nc, nc);  // (next, prev), column-stochastic
    RealMatrix k23 = RealMatrix::Zero(nc, nc);
    for (int a = 0; a < nc; ++a)
      for (int b2 = 0; b2 < nc; ++b2) {
        if (p1(a) > 0) rep.class_transition(b2, a) = p12(a, b2) / p1(a);
        if (p2(a) > 0) k23(b2, a) = p23(a, b2) / p2(a);
      }
    double worst = 0.0;
    for (int a = 0; a < nc; ++a)
      for (int b2 = 0; b2 < nc; ++b2)
        for (int c = 0; c < nc; ++c) {
          double model = p1(a) * rep.class_transition(b2, a) * k23(c, b2);
          worst = std::max(worst,
                           std::abs(p3[static_cast<std::size_t>(a * nc + b2) * nc + c] - model));
        }
    rep.chapman_kolmogorov_residual = worst;
  }
  return rep;
}

DecayScan correlation_decay_scan(const StochasticMPS& s, int k, int l,
                                 const std::vector<int>& gaps) {
  DecayScan scan;
  RealVector p1 = window_joint(s, 1, k);
  for (int gap : gaps) {
    int first2 = k + gap;
    RealVector p2 = window_joint(s, first2, l);
    // joint of the two windows with the gap marginalized
    Matrix m0 = s.rho;
    Matrix e = s.closure;
    for (int j = s.n_sites - 1; j >= first2 - 1 + l; --j) e = s.site(j).heisenberg(e);
    const int d = s.d();
    const int n1 = static_cast<int>(p1.size()), n2 = static_cast<int>(p2.size());
    double dist = 0.0;
    std::vector<int> symbols(k);
    for (int i1 = 0; i1 < n1; ++i1) {
      int rem = i1;
      for (int j = k - 1; j >= 0; --j) {
        symbols[j] = rem % d;
        rem /= d;
      }
      Matrix m = m0;
      for (int j = 0; j < k; ++j) m = s.site(j).update(symbols[j], m);
      for (int j = k; j < first2 - 1; ++j) m = s.site(j).propagate(m);
      std::vector<int> symbols2(l);
      for (int i2 = 0; i2 < n2; ++i2) {
        int rem2 = i2;
        for (int j = l - 1; j >= 0; --j) {
          symbols2[j] = rem2 % d;
          rem2 /= d;
        }
        Matrix mm = m;
        for (int j = 0; j < l; ++j) mm = s.site(first2 - 1 + j).update(symbols2[j], mm);
        dist += std::abs(pair_with(mm, e) - p1(i1) * p2(i2));
      }
    }
    scan.rows.push_back({gap, dist});
  }

  // least-squares slope of log(distance) against gap
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& row : scan.rows) {
    if (row.distance < 1e-13) continue;
    double x = row.gap;
    double y = std::log(row.distance);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  scan.fitted_rate = n >= 2 ? -(n * sxy - sx * sy) / (n * sxx - sx * sx) : 0.0;

  Eigen::ComplexEigenSolver<Matrix> es(s.site(0).transfer().matrix());
  std::vector<double> mods(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) mods[i] = std::abs(es.eigenvalues()(i));
  std::sort(mods.begin(), mods.end(), std::greater<>());
  scan.transfer_gap_rate = mods.size() > 1 && mods[1] > 1e-15 ? -std::log(mods[1]) : 0.0;
  return scan;
}

}  // namespace stochmps
