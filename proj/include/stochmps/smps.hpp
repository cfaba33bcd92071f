#ifndef STOCHMPS_SMPS_HPP
#define STOCHMPS_SMPS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stochmps/channel.hpp"

namespace stochmps {

using Trajectory = std::vector<int>;

// One chain site: a completely positive map per outcome symbol, each given
// by one or more Kraus operators on the D-dimensional bond space. A plain
// measurement (one operator per symbol) is the single-piece special case.
struct SiteFamily {
  std::vector<std::vector<Matrix>> kraus;  // [symbol][piece]

  static SiteFamily from_single(const KrausFamily& f);

  int n_symbols() const { return static_cast<int>(kraus.size()); }
  int dim() const;

  // Σ_k A^{(x,k)} A^{(x,k)†}; the probability effect of symbol x.
  Matrix effect(int x) const;
  // Σ_k A^{(x,k)†} M A^{(x,k)}; the state update when x is observed.
  Matrix update(int x, const Matrix& m) const;
  // Σ_x update(x, m); the symbol-summed (trace-preserving) propagation.
  Matrix propagate(const Matrix& m) const;
  // Γ[Y] = Σ_{x,k} A Y A†; the unital transfer map acting on closures.
  Matrix heisenberg(const Matrix& y) const;

  Superoperator transfer() const;               // Γ as a matrix
  Superoperator symbol_transfer(int x) const;   // Γ_x = Σ_k A[.]A†
  double normalization_residual() const;        // ||Σ_{x,k} A A† − 1||_max
};

// Element-wise positive (classical) form: entrywise nonnegative matrices
// B^{(x)} with joint weight ⟨L|B_{(x_1)}...B_{(x_N)}|R⟩.
struct ElementwiseForm {
  std::vector<RealMatrix> b;  // one nonnegative matrix per symbol
  RealVector left, right;
};

// Joint law over N outcome symbols:
//   P(x_1..x_N) = Tr(A^{(x_N)†}..A^{(x_1)†} ρ A^{(x_1)}..A^{(x_N)} X)
// with per-site CP maps, a PSD trace-one boundary ρ and a PSD closure X.
// Sites may be shared (translation invariance) or site-dependent.
struct StochasticMPS {
  int n_sites = 0;
  std::vector<SiteFamily> sites;  // size 1 (shared) or n_sites
  Matrix rho;
  Matrix closure;
  std::optional<ElementwiseForm> b_form;  // retained by from_elementwise_positive

  const SiteFamily& site(int j) const {  // j in [0, n_sites)
    return sites.size() == 1 ? sites.front() : sites.at(j);
  }
  int d() const { return sites.empty() ? 0 : sites.front().n_symbols(); }
  int bond_dim() const { return sites.empty() ? 0 : sites.front().dim(); }
};

struct ValidationReport {
  bool pass = false;
  std::vector<double> site_residuals;
  double rho_trace_residual = 0.0;
  double rho_min_eigenvalue = 0.0;
  double closure_min_eigenvalue = 0.0;
  double total_probability = 0.0;  // exact, via transfer contraction
  std::string summary() const;
};

ValidationReport validate(const StochasticMPS& s, double tol = 1e-8);

// Exact total Σ_trajectories P via contraction (linear in N).
double total_probability(const StochasticMPS& s);

double joint_probability(const StochasticMPS& s, const Trajectory& t);

// Conditional (filtering) state along a trajectory prefix.
struct FilterState {
  Matrix rho_cond;
  double loglik = 0.0;
  bool dead = false;  // flagged zero-probability conditioning
};

FilterState filter_begin(const StochasticMPS& s);
RealVector predictive_distribution(const FilterState& f, const SiteFamily& site);
FilterState filter_step(const FilterState& f, const SiteFamily& site, int symbol);

std::vector<Trajectory> sample_trajectories(const StochasticMPS& s, int n_paths,
                                            std::uint64_t seed, int n_threads = 1);

// Marginal P(X_n = ·), 1-based n.
RealVector marginal_at(const StochasticMPS& s, int n);

// Joint distribution of the contiguous window [first, first+len), 1-based,
// all other sites marginalized; flattened with the first window site as the
// most significant digit.
RealVector window_joint(const StochasticMPS& s, int first, int len);

// Maps the element-wise positive form to the CP form via
// A^{(x),(y,z)} = sqrt(B^{(x)}_{y,z}) |y⟩⟨z|. Requires Σ_x B^{(x)} to be
// row-stochastic; boundaries become ρ = diag(L)/ΣL and a scaled diag(R)
// closure so the joint law is normalized for the given chain length.
StochasticMPS from_elementwise_positive(const std::vector<RealMatrix>& b, const RealVector& left,
                                        const RealVector& right, int n_sites);

// First-order Markov chain with column-stochastic transition T (T(y,x) =
// P(next=y | prev=x)) and initial distribution pi.
StochasticMPS markov_embedding(const RealMatrix& t, const RealVector& pi, int n_sites);

// Order-k chain over d symbols; t_ctx(c, i) = P(next=i | context c), contexts
// encoded base-d with the oldest symbol most significant. Bond dimension d^k.
StochasticMPS finite_memory_embedding(const RealMatrix& t_ctx, const RealVector& p0_ctx, int d,
                                       int k, int n_sites);

// Gauge rule A -> G^{-1/2} A G^{1/2}, rho -> G^{1/2} rho G^{1/2},
// X -> G^{-1/2} X G^{-1/2}; leaves every joint probability unchanged.
StochasticMPS gauge_transform(const StochasticMPS& s, const Matrix& g);

struct BlockingReport {
  int block_len = 0;
  int n_tuples = 0;
  bool rank_condition_met = false;   // d^L >= Kraus rank of blocked transfer
  int blocked_kraus_rank = 0;
  std::vector<int> tuple_class;      // tuple -> class id (-1: zero weight)
  int n_classes = 0;
  RealMatrix class_transition;       // column-stochastic over classes
  double structure_residual = 0.0;   // blocked transfer vs classical embedding of T^L
  double chapman_kolmogorov_residual = 0.0;  // 3-block factorization defect
  std::string summary() const;
};

// Blocks a translation-invariant element-wise-positive chain over length L
// and reports the induced class process. Requires b_form metadata.
BlockingReport markovize_by_blocking(const StochasticMPS& s, int block_len);

struct DecayScanRow {
  int gap = 0;
  double distance = 0.0;  // L1 distance between window joint and product
};

struct DecayScan {
  std::vector<DecayScanRow> rows;
  double fitted_rate = 0.0;      // least-squares slope of -log(distance)
  double transfer_gap_rate = 0.0;  // -log |lambda_2| of the transfer map
};

// Correlation decay between the windows [1..k] and [k+gap .. k+gap+l-1].
DecayScan correlation_decay_scan(const StochasticMPS& s, int k, int l,
                                 const std::vector<int>& gaps);

}  // namespace stochmps

#endif
