#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "test_util.hpp"

#include "stochmps/projection.hpp"
#include "stochmps/rng.hpp"

using namespace stochmps;
using stochmps::test::max_abs_diff;

namespace {

// projective measurement family: M_ij[σ] = |i><i| σ |j><j|
ProjectionFamily measurement_family(int n) {
  ProjectionFamily fam;
  fam.n_out = n;
  fam.n_in = n;
  fam.blocks.assign(n, {});
  for (int i = 0; i < n; ++i) {
    Matrix k = Matrix::Zero(n, n);
    k(i, i) = 1.0;
    fam.blocks[i].push_back(k);
  }
  return fam;
}

}  // namespace

TEST_CASE("projective measurement family validates") {
  ProjectionFamily fam = measurement_family(3);
  CHECK(fam.normalization_residual() < 1e-14);
  FamilyValidation v = validate_family(family_superoperators(fam));
  CHECK(v.pass);
  CHECK(v.choi_min_eigenvalue > -1e-12);
}

TEST_CASE("perturbed normalization fails with the expected residual") {
  ProjectionFamily fam = measurement_family(3);
  fam.blocks[0][0](0, 0) += 0.1;
  FamilyValidation v = validate_family(family_superoperators(fam));
  CHECK_FALSE(v.pass);
  // (1.1)^2 − 1 = 0.21 on the perturbed diagonal entry
  CHECK(v.trace_condition_residual == doctest::Approx(0.21).epsilon(1e-10));
}

TEST_CASE("random normalized families validate") {
  for (int k = 0; k < 5; ++k) {
    ProjectionFamily fam = random_projection_family(2, 4, 6, 1000 + k);
    CHECK(fam.normalization_residual() < 1e-10);
    FamilyValidation v = validate_family(family_superoperators(fam));
    CHECK(v.pass);
  }
}

TEST_CASE("rank-one family canonicalizes to a single Kraus block") {
  ProjectionFamily fam;
  fam.n_out = 2;
  fam.n_in = 2;
  Matrix a0 = Matrix::Zero(2, 2), a1 = Matrix::Zero(2, 2);
  a0(0, 0) = 1.0;
  a1(1, 1) = 1.0;
  fam.blocks = {{a0}, {a1}};  // Σ A A† = 1, Choi is rank one? (single k)
  ProjectionFamily canon = canonicalize(family_superoperators(fam));
  CHECK(canon.rank() == 1);
  CHECK(reassembly_residual(canon, family_superoperators(fam)) < 1e-12);
}

TEST_CASE("canonicalize reassembles the measurement family") {
  ProjectionFamily fam = measurement_family(3);
  RawFamily raw = family_superoperators(fam);
  ProjectionFamily canon = canonicalize(raw);
  CHECK(reassembly_residual(canon, raw) < 1e-10);
  CHECK(canon.normalization_residual() < 1e-10);
}

TEST_CASE("canonicalize reassembles random families within tolerance") {
  for (int k = 0; k < 5; ++k) {
    ProjectionFamily fam = random_projection_family(2, 4, 5, 2000 + k);
    RawFamily raw = family_superoperators(fam);
    ProjectionFamily canon = canonicalize(raw);
    CHECK(reassembly_residual(canon, raw) < 1e-10);
  }
}

TEST_CASE("canonicalize rejects non-PSD families") {
  ProjectionFamily fam = measurement_family(2);
  RawFamily raw = family_superoperators(fam);
  // make M_01 inconsistent with any CP dilation
  raw[0][1] = 5.0 * raw[0][1];
  CHECK_THROWS_AS(canonicalize(raw), std::invalid_argument);
}

TEST_CASE("single-output projection is the trace") {
  ProjectionFamily fam = random_projection_family(1, 3, 4, 77);
  Matrix rho = project_state(fam, random_density(3, 5));
  REQUIRE(rho.rows() == 1);
  CHECK(std::abs(rho(0, 0) - 1.0) < 1e-10);
}

TEST_CASE("measurement family projects to measurement probabilities") {
  ProjectionFamily fam = measurement_family(3);
  RealVector p(3);
  p << 0.5, 0.3, 0.2;
  Matrix sigma = p.cast<Complex>().asDiagonal();
  Matrix rho = project_state(fam, sigma);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(rho(i, i) - p(i)) < 1e-12);
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(std::abs(rho(i, j)) < 1e-12);
  }
}

TEST_CASE("projected states are densities") {
  for (int k = 0; k < 5; ++k) {
    ProjectionFamily fam = random_projection_family(2, 4, 6, 3000 + k);
    Matrix rho = project_state(fam, random_density(4, 50 + k));
    CHECK(hermiticity_residual(rho) < 1e-10);
    CHECK(min_eigenvalue(rho) > -1e-10);
    CHECK(std::abs(rho.trace().real() - 1.0) < 1e-10);
  }
}

TEST_CASE("project_state rejects non-densities") {
  ProjectionFamily fam = measurement_family(2);
  CHECK_THROWS_AS(project_state(fam, 2.0 * Matrix::Identity(2, 2)), std::invalid_argument);
}

TEST_CASE("projected evolution: t=0 recovers the bare projection") {
  ProjectionFamily fam = random_projection_family(2, 4, 5, 4000);
  LindbladGenerator g{random_hermitian(4, 11), {0.5 * random_matrix(4, 4, 12)}};
  Matrix rho_t = random_density(4, 13);
  auto traj = evolve_projected(fam, g, rho_t, {0.0, 0.5});
  CHECK(max_abs_diff(traj.front(), project_state(fam, rho_t)) < 1e-12);
}

TEST_CASE("projected evolution under L=0 is constant") {
  ProjectionFamily fam = random_projection_family(2, 4, 5, 4100);
  LindbladGenerator g{Matrix::Zero(4, 4), {}};
  Matrix rho_t = random_density(4, 14);
  auto traj = evolve_projected(fam, g, rho_t, {0.0, 0.3, 0.9});
  for (const auto& rho : traj) CHECK(max_abs_diff(rho, traj.front()) < 1e-12);
}

TEST_CASE("projected trajectories stay densities") {
  ProjectionFamily fam = random_projection_family(2, 4, 6, 4200);
  LindbladGenerator g{random_hermitian(4, 15), {0.6 * random_matrix(4, 4, 16)}};
  Matrix rho_t = random_density(4, 17);
  for (const auto& rho : evolve_projected(fam, g, rho_t, {0.1, 0.4, 1.0})) {
    CHECK(std::abs(rho.trace().real() - 1.0) < 1e-10);
    CHECK(min_eigenvalue(rho) > -1e-10);
  }
}

TEST_CASE("projected evolution rejects a non-increasing grid") {
  ProjectionFamily fam = random_projection_family(2, 3, 4, 4300);
  LindbladGenerator g{Matrix::Zero(3, 3), {}};
  CHECK_THROWS_AS(evolve_projected(fam, g, random_density(3, 18), {0.5, 0.5}),
                  std::invalid_argument);
}

TEST_CASE("one-time tensor equals project_state") {
  ProjectionFamily fam = random_projection_family(2, 3, 4, 5000);
  Matrix rho = random_density(3, 19);
  Superoperator transfer = kraus_to_transfer(random_kraus_family(3, 2, 20));
  MultiTimeTensor t1 = multitime_joint(fam, transfer, rho, 1);
  Matrix projected = project_state(fam, rho);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(t1.at({i * 2 + j}) - projected(i, j)) < 1e-12);
}

TEST_CASE("tracing every slot of the multi-time tensor yields one") {
  ProjectionFamily fam = random_projection_family(2, 4, 5, 5100);
  Matrix rho = random_density(4, 21);
  Superoperator transfer = kraus_to_transfer(random_kraus_family(4, 2, 22));
  MultiTimeTensor t3 = multitime_joint(fam, transfer, rho, 3);
  MultiTimeTensor scalar = t3.trace_last().trace_last().trace_last();
  REQUIRE(scalar.values.size() == 1);
  CHECK(std::abs(scalar.values.front() - 1.0) < 1e-10);
}

TEST_CASE("multi-time tensors are projective under final-slot partial trace") {
  ProjectionFamily fam = random_projection_family(2, 4, 6, 5200);
  Matrix rho = random_density(4, 23);
  Superoperator transfer = kraus_to_transfer(random_kraus_family(4, 3, 24));
  MultiTimeTensor t3 = multitime_joint(fam, transfer, rho, 3);
  MultiTimeTensor t2 = multitime_joint(fam, transfer, rho, 2);
  MultiTimeTensor traced = t3.trace_last();
  REQUIRE(traced.values.size() == t2.values.size());
  for (std::size_t i = 0; i < t2.values.size(); ++i)
    CHECK(std::abs(traced.values[i] - t2.values[i]) < 1e-10);
}

TEST_CASE("slot marginals agree across contraction orders") {
  ProjectionFamily fam = random_projection_family(2, 3, 4, 5300);
  Matrix rho = random_density(3, 25);
  Superoperator transfer = kraus_to_transfer(random_kraus_family(3, 2, 26));
  MultiTimeTensor t3 = multitime_joint(fam, transfer, rho, 3);
  // marginal of the last slot: trace the first two slots
  Matrix marginal = Matrix::Zero(2, 2);
  for (int p1 = 0; p1 < 4; ++p1)
    for (int p2 = 0; p2 < 4; ++p2)
      if (p1 % 3 == 0 && p2 % 3 == 0)  // diagonal pairs 0 and 3
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            marginal(i, j) += t3.at({p1, p2, i * 2 + j});
  // direct single-time value through the symbol-summed evolution
  Superoperator phi(fam.n_in);
  for (int d = 0; d < 2; ++d) phi += fam.m_ij(d, d);
  Matrix y = Matrix::Identity(3, 3);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Matrix inner = transfer.apply(fam.m_ij(i, j).apply(y));
      inner = phi.apply(transfer.apply(phi.apply(inner)));
      CHECK(std::abs((rho * inner).trace() - marginal(i, j)) < 1e-10);
    }
}
