#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "test_util.hpp"

#include <cmath>

#include "stochmps/market.hpp"

using namespace stochmps;
using stochmps::test::max_abs_diff;

namespace {

const std::vector<double> kGrid{0.2, 0.4, 0.6, 0.8, 1.0};

}  // namespace

TEST_CASE("scalar case 1 reduces to a scalar solvability test") {
  MarketCase1 c;
  c.alpha = 0.06;
  c.r = 0.02;
  c.sigma = 0.3;
  c.g.H = Matrix::Zero(1, 1);
  c.rho = Matrix::Identity(1, 1);

  c.R = Matrix::Constant(1, 1, Complex(0.0, 0.4));  // anti-Hermitian: coefficient vanishes
  ClosureSolution sol = solve_closure(c);
  CHECK(sol.found);
  CHECK(sol.psd);
  CHECK(std::abs(sol.X(0, 0) - 1.0) < 1e-12);

  c.R = Matrix::Constant(1, 1, 0.4);  // nonzero scalar coefficient: no solution
  ClosureSolution none = solve_closure(c);
  CHECK_FALSE(none.found);
  CHECK(none.smallest_sv > 1e-3);
}

TEST_CASE("constructed case 1 instance is recovered by the solver") {
  MarketCase1 c = example_case1();
  CHECK(closure_map(c).apply(*c.X).cwiseAbs().maxCoeff() < 1e-12);
  ClosureSolution sol = solve_closure(c);
  REQUIRE(sol.found);
  CHECK(sol.residual < 1e-10);
  CHECK(sol.psd);
  // recovers span{|0><0|}
  Matrix expect = Matrix::Zero(2, 2);
  expect(0, 0) = 1.0;
  CHECK(max_abs_diff(sol.X, expect) < 1e-8);
}

TEST_CASE("generic instances report no solution with the smallest singular value") {
  MarketCase1 c = example_case1();
  c.g.H = random_hermitian(2, 314);
  c.R = 0.5 * random_matrix(2, 2, 315);
  ClosureSolution sol = solve_closure(c);
  CHECK_FALSE(sol.found);
  CHECK(sol.smallest_sv > 0.0);
}

TEST_CASE("constructed case 2 instance satisfies its condition exactly") {
  MarketCase2 c = example_case2();
  CHECK(closure_map(c).apply(*c.X).cwiseAbs().maxCoeff() < 1e-12);
  ClosureSolution sol = solve_closure(c);
  REQUIRE(sol.found);
  CHECK(sol.residual < 1e-10);
}

TEST_CASE("degenerate market is trivially a martingale") {
  MarketCase1 c;
  c.alpha = 0.05;
  c.r = 0.05;
  c.sigma = 0.3;
  c.g.H = random_hermitian(2, 1);
  c.g.Rs = {0.4 * random_matrix(2, 2, 2)};
  c.R = 0.3 * random_matrix(2, 2, 3);
  c.rho = random_density(2, 4);
  c.X = Matrix::Identity(2, 2);  // alpha = r: L0[1] = 0 solves the condition
  CHECK(closure_map(c).apply(*c.X).cwiseAbs().maxCoeff() < 1e-12);
  MartingaleReport rep = martingale_check(c, kGrid, 1e-3, 20000, 5);
  CHECK(rep.max_abs_z() < 3.5);
}

TEST_CASE("case 2 with no coupling has a constant Radon-Nikodym value") {
  MarketCase2 c;
  c.alpha = 0.03;
  c.r = 0.03;
  c.sigma = 0.2;
  c.m = 0.0;
  c.g.H = Matrix::Zero(2, 2);
  c.R = Matrix::Zero(2, 2);
  c.rho = random_density(2, 6);
  c.X = Matrix::Identity(2, 2);
  MarketPaths paths = simulate_market(c, {0.0, 0.5, 1.0}, 1e-2, 64, 7);
  for (const auto& slice : paths.z)
    for (double z : slice) CHECK(std::abs(z - 1.0) < 1e-12);
  CHECK(paths.n_nonpositive_z == 0);
}

TEST_CASE("market paths are reproducible per seed") {
  MarketCase1 c = example_case1();
  MarketPaths a = simulate_market(c, {1.0}, 1e-2, 32, 99);
  MarketPaths b = simulate_market(c, {1.0}, 1e-2, 32, 99);
  MarketPaths d = simulate_market(c, {1.0}, 1e-2, 32, 100);
  CHECK(a.stock[0] == b.stock[0]);
  CHECK(a.z[0] == b.z[0]);
  CHECK(a.stock[0] != d.stock[0]);
}

TEST_CASE("case 1 reweighted discounted stock is flat") {
  MarketCase1 c = example_case1();
  MartingaleReport rep = martingale_check(c, kGrid, 1e-3, 20000, 8);
  CHECK(rep.max_abs_z() < 3.5);
}

TEST_CASE("case 1 negative control shows drift") {
  MarketCase1 c = example_case1(true);
  MartingaleReport rep = martingale_check(c, kGrid, 1e-3, 20000, 8);
  CHECK(rep.max_abs_z() > 4.0);
}

TEST_CASE("case 2 reweighted discounted stock is flat") {
  MarketCase2 c = example_case2();
  MartingaleReport rep = martingale_check(c, kGrid, 1e-3, 20000, 9);
  CHECK(rep.max_abs_z() < 3.5);
  CHECK(rep.n_nonpositive_z == 0);
}

TEST_CASE("case 2 negative control shows drift") {
  MarketCase2 c = example_case2(true);
  MartingaleReport rep = martingale_check(c, kGrid, 1e-3, 20000, 9);
  CHECK(rep.max_abs_z() > 4.0);
}

TEST_CASE("case 2 theorem integrand has finite second moments") {
  MarketCase2 c = example_case2();
  MarketPaths paths = simulate_market(c, {0.5, 1.0}, 1e-3, 5000, 10);
  for (std::size_t t = 0; t < paths.times.size(); ++t) {
    double moment = 0.0;
    for (int p = 0; p < 5000; ++p) {
      double v = paths.zcal[t][p] * paths.stock[t][p];
      moment += v * v;
    }
    moment /= 5000;
    CHECK(std::isfinite(moment));
    CHECK(moment < 1e3);
  }
}

TEST_CASE("thermodynamic limit: joint kernel forces the classical reduction") {
  MarketCase2 c = example_case2_thermo();
  ThermoLimitReport rep = thermodynamic_limit_check(c, 1.0, 4e-3, 4000, 11);
  REQUIRE(rep.feasible);
  CHECK(rep.closure_residual < 1e-10);
  CHECK(rep.l0_residual < 1e-10);
  CHECK(rep.proportionality_residual < 1e-10);
  // simulated Z matches the classical Girsanov factor within EM error
  CHECK(rep.girsanov_em_error < 0.01);
  CHECK(rep.girsanov_em_error_half_dt < rep.girsanov_em_error);
  CHECK(std::abs(rep.lag1_z) < 3.5);
}

TEST_CASE("thermodynamic limit reports infeasibility for generic couplings") {
  MarketCase2 c = example_case2_thermo(false);
  ThermoLimitReport rep = thermodynamic_limit_check(c, 1.0, 1e-2, 500, 12);
  CHECK_FALSE(rep.feasible);
}

TEST_CASE("simulation requires an attached closure") {
  MarketCase2 c = example_case2();
  c.X.reset();
  CHECK_THROWS_AS(simulate_market(c, {1.0}, 1e-2, 8, 1), std::invalid_argument);
}
