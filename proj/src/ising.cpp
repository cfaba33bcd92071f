#include "stochmps/ising.hpp"

#include <cmath>
#include <stdexcept>

#include "stochmps/rng.hpp"

namespace stochmps {

namespace {

inline int spin_of(std::uint32_t config, int site) { return (config >> site) & 1u ? 1 : -1; }

std::vector<int> config_to_spins(std::uint32_t config, int n) {
  std::vector<int> s(n);
  for (int j = 0; j < n; ++j) s[j] = spin_of(config, j);
  return s;
}

// local field of site j: sum of open-boundary neighbours
inline int local_field(const std::vector<int>& s, int j) {
  int h = 0;
  if (j > 0) h += s[j - 1];
  if (j + 1 < static_cast<int>(s.size())) h += s[j + 1];
  return h;
}

// heat-bath probability that site j takes value +1 given its neighbours
inline double glauber_up_probability(double beta, int field) {
  double wp = std::exp(-beta * field);
  double wm = std::exp(beta * field);
  return wp / (wp + wm);
}

}  // namespace

double ising_energy(const IsingChain& chain, const std::vector<int>& spins) {
  double e = 0.0;
  for (int j = 0; j + 1 < chain.n; ++j) e += spins[j] * spins[j + 1];
  return e;
}

RealVector gibbs_exact(const IsingChain& chain) {
  if (chain.n > 20) throw std::invalid_argument("gibbs_exact: enumeration infeasible");
  const std::uint32_t total = 1u << chain.n;
  RealVector p(total);
  for (std::uint32_t c = 0; c < total; ++c)
    p(c) = std::exp(-chain.beta * ising_energy(chain, config_to_spins(c, chain.n)));
  return p / p.sum();
}

IsingRun metropolis_run(const IsingChain& chain, long n_steps, long burn_in, std::uint64_t seed,
                        FlipKernel kernel, long record_stride) {
  if (n_steps <= burn_in) throw std::invalid_argument("metropolis_run: n_steps must exceed burn_in");
  Rng rng(seed);
  std::vector<int> s(chain.n);
  for (int j = 0; j < chain.n; ++j) s[j] = rng.uniform() < 0.5 ? 1 : -1;

  IsingRun run;
  bool track_empirical = chain.n <= 20;
  if (track_empirical) run.empirical = RealVector::Zero(1 << chain.n);
  double mag_sum = 0.0, abs_mag_sum = 0.0, energy_sum = 0.0;
  long accepted = 0, measured = 0;
  double energy = ising_energy(chain, s);
  int mag = 0;
  for (int j = 0; j < chain.n; ++j) mag += s[j];

  for (long step = 0; step < n_steps; ++step) {
    int j = static_cast<int>(rng.next_u64() % chain.n);
    int field = local_field(s, j);
    bool flip = false;
    if (kernel == FlipKernel::Glauber) {
      int v = rng.uniform() < glauber_up_probability(chain.beta, field) ? 1 : -1;
      flip = v != s[j];
    } else {
      double delta_h = -2.0 * s[j] * field;
      flip = delta_h <= 0.0 || rng.uniform() < std::exp(-chain.beta * delta_h);
    }
    if (flip) {
      energy += -2.0 * s[j] * field;
      mag -= 2 * s[j];
      s[j] = -s[j];
      ++accepted;
    }
    if (step >= burn_in) {
      ++measured;
      double m = static_cast<double>(mag) / chain.n;
      mag_sum += m;
      abs_mag_sum += std::abs(m);
      energy_sum += energy;
      if (track_empirical) {
        std::uint32_t c = 0;
        for (int b = 0; b < chain.n; ++b)
          if (s[b] > 0) c |= 1u << b;
        run.empirical(c) += 1.0;
      }
      if (record_stride > 0 && measured % record_stride == 0)
        run.series.push_back({step, m, energy});
    }
  }
  run.mean_magnetization = mag_sum / measured;
  run.mean_abs_magnetization = abs_mag_sum / measured;
  run.mean_energy = energy_sum / measured;
  run.acceptance_rate = static_cast<double>(accepted) / n_steps;
  if (track_empirical) {
    run.empirical /= run.empirical.sum();
    RealVector exact = gibbs_exact(chain);
    run.tv_distance = 0.5 * (run.empirical - exact).cwiseAbs().sum();
  }
  return run;
}

namespace {

RealMatrix site_kernel(const IsingChain& chain, FlipKernel kernel, int j) {
  const std::uint32_t total = 1u << chain.n;
  RealMatrix k = RealMatrix::Zero(total, total);
  for (std::uint32_t c = 0; c < total; ++c) {
    std::vector<int> s = config_to_spins(c, chain.n);
    int field = local_field(s, j);
    std::uint32_t c_up = c | (1u << j);
    std::uint32_t c_dn = c & ~(1u << j);
    if (kernel == FlipKernel::Glauber) {
      double p_up = glauber_up_probability(chain.beta, field);
      k(c_up, c) += p_up;
      k(c_dn, c) += 1.0 - p_up;
    } else {
      double delta_h = -2.0 * s[j] * field;
      double accept = std::min(1.0, std::exp(-chain.beta * delta_h));
      std::uint32_t flipped = c ^ (1u << j);
      k(flipped, c) += accept;
      k(c, c) += 1.0 - accept;
    }
  }
  return k;
}

}  // namespace

RealMatrix single_site_kernel(const IsingChain& chain, FlipKernel kernel) {
  const std::uint32_t total = 1u << chain.n;
  RealMatrix k = RealMatrix::Zero(total, total);
  for (int j = 0; j < chain.n; ++j) k += site_kernel(chain, kernel, j);
  return k / chain.n;
}

RealMatrix sweep_kernel(const IsingChain& chain, FlipKernel kernel) {
  const std::uint32_t total = 1u << chain.n;
  RealMatrix k = RealMatrix::Identity(total, total);
  for (int j = 0; j < chain.n; ++j) k = site_kernel(chain, kernel, j) * k;
  return k;
}

double detailed_balance_residual(const IsingChain& chain, FlipKernel kernel) {
  RealVector p = gibbs_exact(chain);
  RealMatrix k = single_site_kernel(chain, kernel);
  double worst = 0.0;
  const std::uint32_t total = 1u << chain.n;
  for (std::uint32_t c = 0; c < total; ++c)
    for (int j = 0; j < chain.n; ++j) {
      std::uint32_t f = c ^ (1u << j);
      worst = std::max(worst, std::abs(p(c) * k(f, c) - p(f) * k(c, f)));
    }
  return worst;
}

double stationarity_residual(const IsingChain& chain, const RealMatrix& kernel) {
  RealVector p = gibbs_exact(chain);
  return (kernel * p - p).cwiseAbs().sum();
}

double GibbsMatrixForm::weight(const std::vector<int>& spins) const {
  RealVector v = right;
  for (auto it = spins.rbegin(); it != spins.rend(); ++it) v = b[*it > 0 ? 0 : 1] * v;
  return left.dot(v);
}

RealVector GibbsMatrixForm::distribution(int n) const {
  const std::uint32_t total = 1u << n;
  RealVector p(total);
  for (std::uint32_t c = 0; c < total; ++c) p(c) = weight(config_to_spins(c, n));
  return p / p.sum();
}

GibbsMatrixForm gibbs_smps_form(const IsingChain& chain) {
  // bond index a remembers the previous spin: a = 0 -> +1, a = 1 -> -1
  GibbsMatrixForm form;
  const double vals[2] = {1.0, -1.0};
  for (int x = 0; x < 2; ++x) {
    RealMatrix bx = RealMatrix::Zero(2, 2);
    for (int a = 0; a < 2; ++a) bx(a, x) = std::exp(-chain.beta * vals[a] * vals[x]);
    form.b.push_back(bx);
  }
  // left boundary contributes no bond energy to the first spin
  double z0 = 2.0 * std::cosh(chain.beta);
  form.left = RealVector::Constant(2, 1.0 / z0);
  form.right = RealVector::Ones(2);
  return form;
}

StochasticMPS gibbs_smps(const IsingChain& chain) {
  GibbsMatrixForm form = gibbs_smps_form(chain);
  double z0 = 2.0 * std::cosh(chain.beta);
  std::vector<RealMatrix> b;
  for (const auto& bx : form.b) b.push_back(bx / z0);  // row-stochastic symbol sum
  return from_elementwise_positive(b, form.left, form.right, chain.n);
}

}  // namespace stochmps
