#ifndef STOCHMPS_MARKET_HPP
#define STOCHMPS_MARKET_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stochmps/qsde.hpp"

namespace stochmps {

// Case 1: the stock itself is superoperator-valued,
//   dŜ = Ŝ( L0[.] dt + α dt + σ(R[.]+[.]R†) dB ),  S(t) = Tr(ρ Ŝ_t[X]),
// reweighted by the classical Girsanov factor with θ = (α−r)/σ.
// Closure condition: L0[X] + (α−r)(R[X]+[X]R†) = 0.
struct MarketCase1 {
  double alpha = 0.0, r = 0.0, sigma = 1.0;
  LindbladGenerator g;
  Matrix R;
  Matrix rho;
  std::optional<Matrix> X;
};

// Case 2: scalar stock dS = α dt + σ dB under the measure generated by
//   dẐ = Ẑ( L0[.] dt + (R[.]+[.]R† + m) dB ),  Z(t) = Tr(ρ Ẑ_t[X]).
// Closure condition: L0[X] + (α−r+σm)X + σ(R[X]+[X]R†) = 0.
struct MarketCase2 {
  double alpha = 0.0, r = 0.0, sigma = 1.0, m = 0.0;
  LindbladGenerator g;
  Matrix R;
  Matrix rho;
  double s0 = 1.0;
  std::optional<Matrix> X;
};

Superoperator closure_map(const MarketCase1& c);
Superoperator closure_map(const MarketCase2& c);

struct ClosureSolution {
  bool found = false;
  bool psd = false;
  Matrix X;
  double residual = 0.0;      // ||map[X]||_max after re-substitution
  double smallest_sv = 0.0;   // smallest singular value of the vectorized map
  int kernel_dim = 0;
  std::string summary() const;
};

// Null space of the vectorized condition; returns a Hermitian kernel element
// of unit trace when one exists, preferring PSD ones (grid-searched on
// two-dimensional kernels).
ClosureSolution solve_closure(const Superoperator& map, double tol = 1e-8);
ClosureSolution solve_closure(const MarketCase1& c, double tol = 1e-8);
ClosureSolution solve_closure(const MarketCase2& c, double tol = 1e-8);

struct MarketPaths {
  std::vector<double> times;
  std::vector<double> discount;              // D(t) = e^{-rt}
  std::vector<std::vector<double>> stock;    // [time][path]
  std::vector<std::vector<double>> z;        // [time][path] Radon-Nikodym value
  std::vector<std::vector<double>> zcal;     // [time][path] Case-2 integrand 𝒵(t)
  int n_nonpositive_z = 0;                   // paths whose Z touched <= 0
};

MarketPaths simulate_market(const MarketCase1& c, const std::vector<double>& record_times,
                            double dt, int n_paths, std::uint64_t seed, int n_threads = 1);
MarketPaths simulate_market(const MarketCase2& c, const std::vector<double>& record_times,
                            double dt, int n_paths, std::uint64_t seed, int n_threads = 1);

struct MartingaleRow {
  double t = 0.0;
  double mean = 0.0, se = 0.0, z = 0.0;  // E[Z D S] against its t=0 value
};

struct MartingaleReport {
  double baseline = 0.0;
  std::vector<MartingaleRow> rows;
  int n_nonpositive_z = 0;
  double max_abs_z() const;
};

MartingaleReport martingale_check(const MarketCase1& c, const std::vector<double>& times,
                                  double dt, int n_paths, std::uint64_t seed, int n_threads = 1);
MartingaleReport martingale_check(const MarketCase2& c, const std::vector<double>& times,
                                  double dt, int n_paths, std::uint64_t seed, int n_threads = 1);

struct ThermoLimitReport {
  bool feasible = false;          // joint kernel of the closure map and L0
  Matrix X;
  double closure_residual = 0.0;
  double l0_residual = 0.0;
  double proportionality_residual = 0.0;  // ||K[X] − λX||_max
  Complex coupling_eigenvalue = 0.0;      // λ
  double girsanov_em_error = 0.0;         // mean |Z_em − Z_classical| at T
  double girsanov_em_error_half_dt = 0.0;
  double lag1_autocorr = 0.0;             // Z-weighted stock-increment autocorr
  double lag1_se = 0.0;
  double lag1_z = 0.0;
  std::string summary() const;
};

// Imposes L0[X] = 0 alongside the closure condition, then verifies the
// classical-Girsanov reduction and the uncorrelated-increment corollary.
ThermoLimitReport thermodynamic_limit_check(const MarketCase2& c, double t_final, double dt,
                                            int n_paths, std::uint64_t seed, int n_threads = 1);

// Constructed instances whose closure conditions hold exactly and whose
// discounted reweighted stock is genuinely driftless; used by tests and the
// shipped example models.
MarketCase1 example_case1(bool violate_condition = false);
MarketCase2 example_case2(bool violate_condition = false);
MarketCase2 example_case2_thermo(bool feasible = true);

}  // namespace stochmps

#endif
