#ifndef STOCHMPS_ISING_HPP
#define STOCHMPS_ISING_HPP

#include <cstdint>
#include <vector>

#include "stochmps/smps.hpp"

namespace stochmps {

// Open-boundary classical chain H = Σ_j s_j s_{j+1}, spins ±1.
struct IsingChain {
  int n = 2;
  double beta = 1.0;
};

enum class FlipKernel { Glauber, Metropolis };

double ising_energy(const IsingChain& chain, const std::vector<int>& spins);

// Exact Gibbs distribution over the 2^n configurations (bit c of the config
// index set => spin +1 at site c counted from the left).
RealVector gibbs_exact(const IsingChain& chain);

struct IsingSample {
  long step = 0;
  double magnetization = 0.0;
  double energy = 0.0;
};

struct IsingRun {
  std::vector<IsingSample> series;        // recorded every `record_stride` steps
  double mean_magnetization = 0.0;
  double mean_energy = 0.0;
  double mean_abs_magnetization = 0.0;
  double acceptance_rate = 0.0;
  RealVector empirical;                    // post burn-in visit frequencies (n <= 20)
  double tv_distance = -1.0;               // to exact Gibbs, when feasible
};

IsingRun metropolis_run(const IsingChain& chain, long n_steps, long burn_in, std::uint64_t seed,
                        FlipKernel kernel = FlipKernel::Glauber, long record_stride = 0);

// Single random-site update kernel as an explicit column-stochastic
// 2^n x 2^n matrix: K(new, old).
RealMatrix single_site_kernel(const IsingChain& chain, FlipKernel kernel);
// One sequential sweep (site 1..n) as a kernel product.
RealMatrix sweep_kernel(const IsingChain& chain, FlipKernel kernel);

// max over single-flip pairs of |p(s) K(s'|s) − p(s') K(s|s')|
double detailed_balance_residual(const IsingChain& chain, FlipKernel kernel);
// ||K p − p||_1 for a given kernel and the chain's Gibbs distribution
double stationarity_residual(const IsingChain& chain, const RealMatrix& kernel);

// Bond-dimension-2 matrix-product form of the unnormalized Gibbs weights:
// selector matrices B(s)_{a,b} = δ_{b, idx(s)} e^{−β val(a) s} with boundary
// vectors chosen so ⟨L|B(s_1)..B(s_N)|R⟩ = e^{−β H(s)} exactly.
struct GibbsMatrixForm {
  std::vector<RealMatrix> b;  // per spin value (index 0 -> +1, 1 -> -1)
  RealVector left, right;
  double weight(const std::vector<int>& spins) const;  // matrix-product value
  RealVector distribution(int n) const;                // normalized over 2^n configs
};

GibbsMatrixForm gibbs_smps_form(const IsingChain& chain);

// The same weights as a normalized StochasticMPS (element-wise positive form).
StochasticMPS gibbs_smps(const IsingChain& chain);

}  // namespace stochmps

#endif
