#ifndef STOCHMPS_QSDE_HPP
#define STOCHMPS_QSDE_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "stochmps/master.hpp"

namespace stochmps {

// Diffusive continuum model
//   dẐ_t = Ẑ_t ( L0[.] dt + (σ (R[.]+[.]R†) + m) dB_t ),
// read against a boundary pair as Z_t = Tr(ρ Ẑ_t[X]). The characteristic
// generator L(λ) = L0 + L1(λ) is derived from this SDE by Ito calculus:
//   L1(λ) = iλσ (R[.]+[.]R†) + (iλm − ½λ²) Id,
// which is the normative form used everywhere below.
struct DiffusiveModel {
  LindbladGenerator g;
  Matrix R;
  double sigma = 1.0;
  double m = 0.0;
  Matrix rho;
  Matrix X;
  int dim() const { return g.dim(); }
};

// K[M] = R M + M R†
Superoperator coupling_superop(const Matrix& r);

Superoperator char_generator(const DiffusiveModel& model, double lambda);

// Two-driver variant (independent B^x, B^y):
//   dẐ = Ẑ( L0 dt + σ(K_s/2) dB^x − iσ(K_a/2) dB^y + ½σm (dB^x + i dB^y) ),
// with K_s = R[.]+[.]R†, K_a = R[.]−[.]R†. Its verification target couples to
// exp(iλ(B^x + iB^y)) and the Ito derivation collapses to
//   L(λ) = L0 + iλσ R[.]   (left multiplication; the m terms cancel).
Superoperator char_generator_2d(const DiffusiveModel& model, double lambda);

struct DiffusiveSamples {
  std::vector<double> times;
  std::vector<std::vector<Complex>> z;  // [time][path] value Tr(ρ Ẑ[X])
  std::vector<std::vector<Complex>> w;  // [time][path] driver: B_t, or B^x+iB^y
};

DiffusiveSamples simulate_diffusive(const DiffusiveModel& model,
                                    const std::vector<double>& record_times, double dt,
                                    int n_paths, std::uint64_t seed, int n_threads = 1);

DiffusiveSamples simulate_diffusive_2d(const DiffusiveModel& model,
                                       const std::vector<double>& record_times, double dt,
                                       int n_paths, std::uint64_t seed, int n_threads = 1);

// The commuting-generator pathwise solution
//   Ẑ_t = exp( t(L0 − ½ N²) + N B_t ),  N = σ(R[.]+[.]R†) + m,
// evaluated against (ρ, X). Exact for D = 1 and whenever [L0, N] = 0.
Complex closed_form_diffusive(const DiffusiveModel& model, double t, double b_value);

struct CharCheck {
  Complex mc;
  Complex exact;
  double se_re = 0.0, se_im = 0.0;
  double z_re = 0.0, z_im = 0.0;
  double max_z() const { return std::max(std::abs(z_re), std::abs(z_im)); }
};

// Monte-Carlo estimate of E[Z_t e^{iλ w_t}] against the semigroup value.
CharCheck char_check_from_samples(const DiffusiveSamples& samples, int time_index, double lambda,
                                  Complex exact);

CharCheck char_fn_check(const DiffusiveModel& model, double lambda, double t, double dt,
                        int n_paths, std::uint64_t seed, int n_threads = 1);
CharCheck char_fn_check_2d(const DiffusiveModel& model, double lambda, double t, double dt,
                           int n_paths, std::uint64_t seed, int n_threads = 1);

Complex char_exact(const DiffusiveModel& model, double lambda, double t);
Complex char_exact_2d(const DiffusiveModel& model, double lambda, double t);

// Counting model with generator L(λ) = i[H,.] + μ(e^{iλ} U[.]U† − [.]).
struct CountingModel {
  Matrix H;
  Matrix U;
  double mu = 1.0;
  int dim() const { return static_cast<int>(H.rows()); }
};

Superoperator counting_generator(const CountingModel& model, double lambda);

// Exact jump-clock simulation of the counting record N_t.
std::vector<int> simulate_counting(const CountingModel& model, double t, int n_paths,
                                   std::uint64_t seed, int n_threads = 1);

CharCheck counting_char_check(const CountingModel& model, double lambda, double t,
                              const std::vector<int>& counts);

// Classical Girsanov reference: Z removes the drift θ from B.
struct GirsanovRow {
  double t = 0.0;
  double weighted_mean = 0.0, mean_se = 0.0, mean_z = 0.0;
  double weighted_var = 0.0, var_se = 0.0, var_z = 0.0;
};

struct GirsanovReport {
  std::vector<GirsanovRow> rows;
  double ez = 0.0, ez_se = 0.0;  // E[Z_T] vs 1
  bool pass(double z_bound = 3.0) const;
};

GirsanovReport girsanov_reference(const std::function<double(double)>& theta, double t_final,
                                  double dt, int n_paths, std::uint64_t seed,
                                  const std::vector<double>& check_times, int n_threads = 1);

// Strong Euler-Maruyama error E|Z_T^{EM} − Z_T^{closed}| at dt, dt/2, ...,
// with increments refined from a common fine path. Requires D = 1.
std::vector<double> em_strong_errors(const DiffusiveModel& model, double t, double base_dt,
                                     int n_levels, int n_paths, std::uint64_t seed);

// Deterministic characteristic value of the discrete ±sqrt(Δ) record scheme
// A^{(±1)} = (1 + ΔQ ± sqrt(Δ) R)/sqrt(2) after t/Δ steps.
Complex discrete_scheme_char_value(const DiffusiveModel& model, double lambda, double t,
                                   double delta);

}  // namespace stochmps

#endif
