#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "test_util.hpp"

#include <cmath>

#include "stochmps/rng.hpp"
#include "stochmps/smps.hpp"

using namespace stochmps;
using stochmps::test::max_abs_diff;

namespace {

StochasticMPS fair_coin_chain(int n_sites) {
  KrausFamily f;
  f.ops = {Matrix::Constant(1, 1, 1.0 / std::sqrt(2.0)),
           Matrix::Constant(1, 1, 1.0 / std::sqrt(2.0))};
  StochasticMPS s;
  s.n_sites = n_sites;
  s.sites = {SiteFamily::from_single(f)};
  s.rho = Matrix::Identity(1, 1);
  s.closure = Matrix::Identity(1, 1);
  return s;
}

StochasticMPS random_chain(int d, int bond, int n_sites, std::uint64_t seed) {
  StochasticMPS s;
  s.n_sites = n_sites;
  s.sites = {SiteFamily::from_single(random_kraus_family(bond, d, seed))};
  s.rho = random_density(bond, seed + 1);
  s.closure = Matrix::Identity(bond, bond);
  return s;
}

RealMatrix example_transition() {
  RealMatrix t(2, 2);
  t << 0.9, 0.2, 0.1, 0.8;  // column-stochastic
  return t;
}

double markov_chain_prob(const RealMatrix& t, const RealVector& pi, const Trajectory& traj) {
  double p = pi(traj.front());
  for (std::size_t j = 1; j < traj.size(); ++j) p *= t(traj[j], traj[j - 1]);
  return p;
}

std::vector<Trajectory> all_trajectories(int d, int n) {
  std::vector<Trajectory> out;
  Trajectory t(n, 0);
  while (true) {
    out.push_back(t);
    int j = n - 1;
    while (j >= 0 && ++t[j] == d) t[j--] = 0;
    if (j < 0) break;
  }
  return out;
}

}  // namespace

TEST_CASE("validate accepts the scalar coin and reports exact total") {
  StochasticMPS s = fair_coin_chain(3);
  ValidationReport rep = validate(s);
  CHECK(rep.pass);
  CHECK(rep.total_probability == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("validate reports the normalization defect") {
  KrausFamily f;
  Matrix a0 = Matrix::Zero(2, 2), a1 = Matrix::Zero(2, 2);
  a0(0, 0) = 1.0;
  a1(1, 1) = std::sqrt(0.9);
  f.ops = {a0, a1};  // Σ A A† = diag(1, 0.9)
  StochasticMPS s;
  s.n_sites = 2;
  s.sites = {SiteFamily::from_single(f)};
  s.rho = 0.5 * Matrix::Identity(2, 2);
  s.closure = Matrix::Identity(2, 2);
  ValidationReport rep = validate(s);
  CHECK_FALSE(rep.pass);
  CHECK(rep.site_residuals.front() == doctest::Approx(0.1).epsilon(1e-10));
}

TEST_CASE("left-renormalized random operators validate") {
  // G_x -> S^{-1/2} G_x with S = Σ G G† restores Σ A A† = 1
  std::vector<Matrix> g = {random_matrix(3, 3, 7), random_matrix(3, 3, 8)};
  Matrix s_mat = Matrix::Zero(3, 3);
  for (const auto& gx : g) s_mat += gx * gx.adjoint();
  Matrix fix = inv_sqrt_psd(s_mat);
  KrausFamily f;
  for (const auto& gx : g) f.ops.push_back(fix * gx);
  CHECK(f.normalization_residual() < 1e-10);
}

TEST_CASE("scalar i.i.d. joints are the product law") {
  StochasticMPS s = fair_coin_chain(3);
  CHECK(joint_probability(s, {0, 1, 0}) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK_THROWS_AS(joint_probability(s, {0, 2, 0}), std::invalid_argument);
  CHECK_THROWS_AS(joint_probability(s, {0, 1}), std::invalid_argument);
}

TEST_CASE("Markov embedding reproduces the chain rule product") {
  RealMatrix t = example_transition();
  RealVector pi(2);
  pi << 0.35, 0.65;
  StochasticMPS s = markov_embedding(t, pi, 4);
  for (const auto& traj : all_trajectories(2, 4))
    CHECK(joint_probability(s, traj) ==
          doctest::Approx(markov_chain_prob(t, pi, traj)).epsilon(1e-12));
}

TEST_CASE("random chain joints sum to one") {
  StochasticMPS s = random_chain(2, 3, 8, 42);
  double total = 0.0;
  for (const auto& traj : all_trajectories(2, 8)) total += joint_probability(s, traj);
  CHECK(std::abs(total - 1.0) < 1e-10);
  CHECK(std::abs(total_probability(s) - total) < 1e-12);
}

TEST_CASE("filter chain rule matches the joint law") {
  StochasticMPS s = random_chain(2, 3, 6, 43);
  for (const auto& traj : all_trajectories(2, 6)) {
    FilterState f = filter_begin(s);
    double log_p = 0.0;
    for (int j = 0; j < s.n_sites; ++j) {
      RealVector pred = predictive_distribution(f, s.site(j));
      CHECK(pred.sum() == doctest::Approx(1.0).epsilon(1e-12));
      log_p += std::log(pred(traj[j]));
      f = filter_step(f, s.site(j), traj[j]);
      CHECK(f.rho_cond.trace().real() == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(min_eigenvalue(f.rho_cond) > -1e-10);
    }
    CHECK(std::exp(log_p) == doctest::Approx(joint_probability(s, traj)).epsilon(1e-10));
    CHECK(f.loglik == doctest::Approx(log_p).epsilon(1e-10));
  }
}

TEST_CASE("zero-probability conditioning is flagged, not divided by") {
  KrausFamily f;
  Matrix a0 = Matrix::Zero(1, 1), a1 = Matrix::Identity(1, 1);
  f.ops = {a0, a1};
  FilterState state;
  state.rho_cond = Matrix::Identity(1, 1);
  FilterState next = filter_step(state, SiteFamily::from_single(f), 0);
  CHECK(next.dead);
  CHECK(std::isinf(next.loglik));
}

TEST_CASE("sampled coin frequencies converge") {
  StochasticMPS s = fair_coin_chain(1);
  auto paths = sample_trajectories(s, 100000, 7);
  double ones = 0;
  for (const auto& p : paths) ones += p.front();
  CHECK(std::abs(ones / paths.size() - 0.5) < 0.01);
}

TEST_CASE("sampled Markov transition frequencies match the kernel") {
  RealMatrix t = example_transition();
  RealVector pi(2);
  pi << 0.5, 0.5;
  StochasticMPS s = markov_embedding(t, pi, 8);
  auto paths = sample_trajectories(s, 20000, 99);
  RealMatrix counts = RealMatrix::Zero(2, 2);
  for (const auto& p : paths)
    for (std::size_t j = 1; j < p.size(); ++j) counts(p[j], p[j - 1]) += 1.0;
  for (int from = 0; from < 2; ++from) {
    double n_from = counts.col(from).sum();
    for (int to = 0; to < 2; ++to) {
      double phat = counts(to, from) / n_from;
      double se = std::sqrt(t(to, from) * (1 - t(to, from)) / n_from);
      CHECK(std::abs(phat - t(to, from)) < 3 * se);
    }
  }
}

TEST_CASE("sampling is deterministic per seed and thread-count independent") {
  StochasticMPS s = random_chain(2, 2, 5, 55);
  auto a = sample_trajectories(s, 64, 1234);
  auto b = sample_trajectories(s, 64, 1234);
  auto c = sample_trajectories(s, 64, 1234, 4);
  CHECK(a == b);
  CHECK(a == c);
  auto d = sample_trajectories(s, 64, 1235);
  CHECK(a != d);
}

TEST_CASE("marginals: i.i.d. chains are site independent") {
  StochasticMPS s = fair_coin_chain(5);
  for (int n = 1; n <= 5; ++n) {
    RealVector p = marginal_at(s, n);
    CHECK(p(0) == doctest::Approx(0.5).epsilon(1e-12));
  }
  CHECK_THROWS_AS(marginal_at(s, 0), std::invalid_argument);
  CHECK_THROWS_AS(marginal_at(s, 6), std::invalid_argument);
}

TEST_CASE("marginals agree with brute-force enumeration") {
  StochasticMPS s = random_chain(2, 3, 8, 4242);
  RealVector brute = RealVector::Zero(2);
  for (const auto& traj : all_trajectories(2, 8)) brute(traj[4]) += joint_probability(s, traj);
  CHECK(max_abs_diff(marginal_at(s, 5), brute) < 1e-10);
}

TEST_CASE("Markov marginals are powers of the transition matrix") {
  RealMatrix t = example_transition();
  RealVector pi(2);
  pi << 0.3, 0.7;
  StochasticMPS s = markov_embedding(t, pi, 6);
  RealVector expect = pi;
  for (int n = 1; n <= 6; ++n) {
    CHECK(max_abs_diff(marginal_at(s, n), expect) < 1e-12);
    expect = t * expect;
  }
}

TEST_CASE("elementwise-positive form: scalar bond gives the i.i.d. law") {
  std::vector<RealMatrix> b = {RealMatrix::Constant(1, 1, 0.3), RealMatrix::Constant(1, 1, 0.7)};
  StochasticMPS s = from_elementwise_positive(b, RealVector::Ones(1), RealVector::Ones(1), 3);
  CHECK(joint_probability(s, {0, 1, 1}) == doctest::Approx(0.3 * 0.7 * 0.7).epsilon(1e-12));
}

TEST_CASE("elementwise-positive form matches the direct matrix-product oracle") {
  Rng rng(2024);
  RealMatrix b0(2, 2), b1(2, 2);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      b0(r, c) = rng.uniform();
      b1(r, c) = rng.uniform();
    }
  // normalize rows of b0 + b1
  for (int r = 0; r < 2; ++r) {
    double row = b0.row(r).sum() + b1.row(r).sum();
    b0.row(r) /= row;
    b1.row(r) /= row;
  }
  RealVector left(2), right(2);
  left << 0.6, 0.4;
  right << 1.0, 2.0;
  StochasticMPS s = from_elementwise_positive({b0, b1}, left, right, 6);

  double norm = 0.0;
  std::vector<double> direct;
  for (const auto& traj : all_trajectories(2, 6)) {
    RealMatrix prod = RealMatrix::Identity(2, 2);
    for (int x : traj) prod = prod * (x == 0 ? b0 : b1);
    direct.push_back(left.dot(prod * right));
    norm += direct.back();
  }
  std::size_t idx = 0;
  for (const auto& traj : all_trajectories(2, 6))
    CHECK(joint_probability(s, traj) == doctest::Approx(direct[idx++] / norm).epsilon(1e-12));
}

TEST_CASE("elementwise-positive Kraus pieces are rank-one units") {
  std::vector<RealMatrix> b = {0.5 * RealMatrix::Identity(2, 2),
                               0.5 * RealMatrix::Ones(2, 2) * 0.5};
  // rows: 0.5 + 0.5 = 1
  StochasticMPS s = from_elementwise_positive(b, RealVector::Ones(2), RealVector::Ones(2), 2);
  for (const auto& symbol : s.sites.front().kraus)
    for (const auto& piece : symbol) {
      int nonzeros = 0;
      for (int r = 0; r < piece.rows(); ++r)
        for (int c = 0; c < piece.cols(); ++c)
          if (std::abs(piece(r, c)) > 0) ++nonzeros;
      CHECK(nonzeros == 1);
    }
}

TEST_CASE("elementwise-positive form rejects bad input") {
  RealMatrix neg = -RealMatrix::Identity(2, 2);
  CHECK_THROWS_AS(
      from_elementwise_positive({neg, RealMatrix::Identity(2, 2)}, RealVector::Ones(2),
                                RealVector::Ones(2), 3),
      std::invalid_argument);
  RealMatrix half = 0.4 * RealMatrix::Identity(2, 2);
  CHECK_THROWS_AS(from_elementwise_positive({half, half}, RealVector::Ones(2),
                                            RealVector::Ones(2), 3),
                  std::invalid_argument);
}

TEST_CASE("finite-memory embedding with k=1 is the Markov law") {
  RealMatrix t = example_transition();
  RealVector p0(2);
  p0 << 0.25, 0.75;  // pre-chain state X_0, so X_1 ~ T p0
  RealMatrix t_ctx(2, 2);
  t_ctx << t(0, 0), t(1, 0), t(0, 1), t(1, 1);  // rows indexed by context
  StochasticMPS s = finite_memory_embedding(t_ctx, p0, 2, 1, 5);
  RealVector pi = t * p0;
  StochasticMPS markov = markov_embedding(t, pi, 5);
  for (const auto& traj : all_trajectories(2, 5))
    CHECK(joint_probability(s, traj) ==
          doctest::Approx(joint_probability(markov, traj)).epsilon(1e-12));
}

TEST_CASE("order-2 memory embedding matches the chain-rule oracle") {
  const int d = 2, k = 2, n = 8;
  Rng rng(77);
  RealMatrix t_ctx(4, 2);
  for (int ctx = 0; ctx < 4; ++ctx) {
    double a = 0.1 + 0.8 * rng.uniform();
    t_ctx(ctx, 0) = a;
    t_ctx(ctx, 1) = 1.0 - a;
  }
  RealVector p0(4);
  p0 << 0.1, 0.2, 0.3, 0.4;
  StochasticMPS s = finite_memory_embedding(t_ctx, p0, d, k, n);
  CHECK(s.bond_dim() == 4);

  // chain-rule oracle with the hidden pre-chain context marginalized
  double total = 0.0;
  for (const auto& traj : all_trajectories(d, n)) {
    double direct = 0.0;
    for (int y0 = 0; y0 < 4; ++y0) {
      double p = p0(y0);
      int ctx = y0;
      for (int j = 0; j < n; ++j) {
        p *= t_ctx(ctx, traj[j]);
        ctx = (ctx * d + traj[j]) % 4;
      }
      direct += p;
    }
    total += direct;
    CHECK(joint_probability(s, traj) == doctest::Approx(direct).epsilon(1e-12));
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("context-independent memory tensor gives an i.i.d. law") {
  RealMatrix t_ctx(4, 2);
  for (int ctx = 0; ctx < 4; ++ctx) {
    t_ctx(ctx, 0) = 0.3;
    t_ctx(ctx, 1) = 0.7;
  }
  RealVector p0 = RealVector::Constant(4, 0.25);
  StochasticMPS s = finite_memory_embedding(t_ctx, p0, 2, 2, 4);
  CHECK(joint_probability(s, {0, 1, 0, 1}) ==
        doctest::Approx(0.3 * 0.7 * 0.3 * 0.7).epsilon(1e-12));
}

TEST_CASE("gauge transformation leaves the joint law invariant") {
  StochasticMPS s = random_chain(2, 3, 5, 2025);
  Matrix g = random_density(3, 11) + 0.5 * Matrix::Identity(3, 3);  // PSD, invertible
  StochasticMPS gauged = gauge_transform(s, g);
  for (const auto& traj : all_trajectories(2, 5))
    CHECK(joint_probability(gauged, traj) ==
          doctest::Approx(joint_probability(s, traj)).epsilon(1e-9));
}

TEST_CASE("blocking a Markov-embedded chain at L=1 recovers the transition") {
  RealMatrix t = example_transition();
  RealVector pi(2);
  pi << 0.5, 0.5;
  StochasticMPS s = markov_embedding(t, pi, 3);
  BlockingReport rep = markovize_by_blocking(s, 1);
  CHECK(rep.n_classes == 2);  // singletons
  CHECK(rep.tuple_class[0] != rep.tuple_class[1]);
  CHECK(max_abs_diff(rep.class_transition, t) < 1e-10);
  CHECK(rep.structure_residual < 1e-12);
  CHECK(rep.chapman_kolmogorov_residual < 1e-10);
  // Kraus rank of the transfer is 4 > d = 2: flagged, still reported
  CHECK_FALSE(rep.rank_condition_met);
  CHECK(rep.blocked_kraus_rank == 4);
}

TEST_CASE("blocking at L=3 passes Chapman-Kolmogorov and the rank condition") {
  RealMatrix t = example_transition();
  RealVector pi(2);
  pi << 0.4, 0.6;
  StochasticMPS s = markov_embedding(t, pi, 9);
  BlockingReport rep = markovize_by_blocking(s, 3);
  CHECK(rep.rank_condition_met);  // 8 tuples >= Kraus rank 4
  CHECK(rep.structure_residual < 1e-12);
  CHECK(rep.chapman_kolmogorov_residual < 1e-10);
  // classes group tuples by (first, last) symbol
  CHECK(rep.n_classes == 4);
}

TEST_CASE("blocking requires the elementwise form") {
  StochasticMPS s = random_chain(2, 2, 4, 3);
  CHECK_THROWS_AS(markovize_by_blocking(s, 2), std::invalid_argument);
}

TEST_CASE("correlation decay: product laws have zero distance") {
  StochasticMPS s = fair_coin_chain(12);
  DecayScan scan = correlation_decay_scan(s, 1, 1, {1, 2, 3});
  for (const auto& row : scan.rows) CHECK(row.distance < 1e-12);
}

TEST_CASE("correlation decay rate tracks the transfer spectral gap") {
  RealMatrix t = example_transition();
  RealVector pi(2);
  pi << 0.6667, 0.3333;  // near stationary
  StochasticMPS s = markov_embedding(t, pi, 20);
  DecayScan scan = correlation_decay_scan(s, 1, 1, {1, 2, 3, 4, 5, 6});
  // second eigenvalue of T is 0.7
  CHECK(scan.transfer_gap_rate == doctest::Approx(-std::log(0.7)).epsilon(1e-6));
  CHECK(scan.fitted_rate > 0.5 * scan.transfer_gap_rate);
  CHECK(scan.fitted_rate < 2.0 * scan.transfer_gap_rate);
  for (std::size_t i = 1; i < scan.rows.size(); ++i)
    CHECK(scan.rows[i].distance < scan.rows[i - 1].distance + 1e-12);
}
