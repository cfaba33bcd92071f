#include "stochmps/qsde.hpp"

#include <cmath>
#include <stdexcept>

#include "stochmps/rng.hpp"

namespace stochmps {

namespace {

std::vector<int> record_steps(const std::vector<double>& record_times, double dt) {
  std::vector<int> steps;
  for (double t : record_times) {
    int k = static_cast<int>(std::llround(t / dt));
    if (std::abs(k * dt - t) > 1e-9)
      throw std::invalid_argument("record times must be multiples of dt");
    steps.push_back(k);
  }
  return steps;
}

Complex pair_value(const Vector& u, const Vector& x_vec) { return u.dot(x_vec); }

}  // namespace

Superoperator coupling_superop(const Matrix& r) {
  return Superoperator::left_mult(r) + Superoperator::right_mult(r.adjoint());
}

Superoperator char_generator(const DiffusiveModel& model, double lambda) {
  Superoperator l = build_L0(model.g);
  l += (kImag * lambda * model.sigma) * coupling_superop(model.R);
  l += (kImag * lambda * model.m - 0.5 * lambda * lambda) * Superoperator::identity(model.dim());
  return l;
}

Superoperator char_generator_2d(const DiffusiveModel& model, double lambda) {
  Superoperator l = build_L0(model.g);
  l += (kImag * lambda * model.sigma) * Superoperator::left_mult(model.R);
  return l;
}

// Shared Euler-Maruyama driver. The superoperator process composes new noise
// factors on the right, so the adjoint row vector vec(ρ)† Ẑ evolves by
// u ← (G0† + ΔB G1† [+ ΔB' G2†]) u and Z = u† vec(X).
static DiffusiveSamples run_em(const Matrix& gen_dt, const std::vector<Matrix>& noise,
                               const Vector& rho_vec, const Vector& x_vec,
                               const std::vector<double>& record_times, double dt, int n_paths,
                               std::uint64_t seed, int n_threads, bool complex_driver) {
  DiffusiveSamples out;
  out.times = record_times;
  std::vector<int> steps = record_steps(record_times, dt);
  int total_steps = steps.empty() ? 0 : *std::max_element(steps.begin(), steps.end());
  out.z.assign(record_times.size(), std::vector<Complex>(n_paths));
  out.w.assign(record_times.size(), std::vector<Complex>(n_paths));

  const double sqrt_dt = std::sqrt(dt);
  Matrix a0 = Matrix::Identity(gen_dt.rows(), gen_dt.cols()) + dt * gen_dt.adjoint();
  std::vector<Matrix> a_noise;
  for (const auto& n : noise) a_noise.push_back(n.adjoint());

  parallel_for(n_paths, n_threads, [&](std::int64_t path) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(path));
    Vector u = rho_vec;
    Complex w = 0.0;
    std::size_t next_record = 0;
    auto record_if_due = [&](int k) {
      while (next_record < steps.size() && steps[next_record] == k) {
        out.z[next_record][path] = pair_value(u, x_vec);
        out.w[next_record][path] = w;
        ++next_record;
      }
    };
    record_if_due(0);
    Vector tmp(u.size());
    for (int k = 1; k <= total_steps; ++k) {
      double db_x = sqrt_dt * rng.normal();
      tmp.noalias() = a0 * u;
      tmp.noalias() += db_x * (a_noise[0] * u);
      if (complex_driver) {
        double db_y = sqrt_dt * rng.normal();
        tmp.noalias() += db_y * (a_noise[1] * u);
        w += Complex(db_x, db_y);
      } else {
        w += db_x;
      }
      u.swap(tmp);
      record_if_due(k);
    }
  });
  return out;
}

DiffusiveSamples simulate_diffusive(const DiffusiveModel& model,
                                    const std::vector<double>& record_times, double dt,
                                    int n_paths, std::uint64_t seed, int n_threads) {
  Matrix gen = build_L0(model.g).matrix();
  Matrix noise = (model.sigma * coupling_superop(model.R) +
                  model.m * Superoperator::identity(model.dim()))
                     .matrix();
  return run_em(gen, {noise}, vectorize(model.rho), vectorize(model.X), record_times, dt, n_paths,
                seed, n_threads, false);
}

DiffusiveSamples simulate_diffusive_2d(const DiffusiveModel& model,
                                       const std::vector<double>& record_times, double dt,
                                       int n_paths, std::uint64_t seed, int n_threads) {
  Matrix gen = build_L0(model.g).matrix();
  Superoperator sym = coupling_superop(model.R);           // R[.]+[.]R†
  Superoperator asym = Superoperator::left_mult(model.R) -
                       Superoperator::right_mult(model.R.adjoint());  // R[.]−[.]R†
  Superoperator id = Superoperator::identity(model.dim());
  Matrix noise_x = (0.5 * model.sigma * sym + Complex(0.5 * model.sigma * model.m, 0.0) * id)
                       .matrix();
  Matrix noise_y =
      ((-0.5 * kImag * model.sigma) * asym + (0.5 * kImag * model.sigma * model.m) * id).matrix();
  return run_em(gen, {noise_x, noise_y}, vectorize(model.rho), vectorize(model.X), record_times,
                dt, n_paths, seed, n_threads, true);
}

Complex closed_form_diffusive(const DiffusiveModel& model, double t, double b_value) {
  Matrix n = (model.sigma * coupling_superop(model.R) +
              model.m * Superoperator::identity(model.dim()))
                 .matrix();
  Matrix exponent = t * (build_L0(model.g).matrix() - 0.5 * n * n) + b_value * n;
  return vectorize(model.rho).dot(expm(exponent) * vectorize(model.X));
}

CharCheck char_check_from_samples(const DiffusiveSamples& samples, int time_index, double lambda,
                                  Complex exact) {
  const auto& z = samples.z.at(time_index);
  const auto& w = samples.w.at(time_index);
  const int n = static_cast<int>(z.size());
  Complex sum = 0.0;
  double sum_re2 = 0.0, sum_im2 = 0.0;
  for (int p = 0; p < n; ++p) {
    Complex v = z[p] * std::exp(kImag * lambda * w[p]);
    sum += v;
    sum_re2 += v.real() * v.real();
    sum_im2 += v.imag() * v.imag();
  }
  CharCheck c;
  c.mc = sum / static_cast<double>(n);
  c.exact = exact;
  c.se_re = std::sqrt(std::max(0.0, sum_re2 / n - c.mc.real() * c.mc.real()) / n);
  c.se_im = std::sqrt(std::max(0.0, sum_im2 / n - c.mc.imag() * c.mc.imag()) / n);
  c.z_re = c.se_re > 0 ? (c.mc.real() - exact.real()) / c.se_re : 0.0;
  c.z_im = c.se_im > 0 ? (c.mc.imag() - exact.imag()) / c.se_im : 0.0;
  return c;
}

Complex char_exact(const DiffusiveModel& model, double lambda, double t) {
  Matrix e = expm((t * char_generator(model, lambda).matrix()).eval());
  return vectorize(model.rho).dot(e * vectorize(model.X));
}

Complex char_exact_2d(const DiffusiveModel& model, double lambda, double t) {
  Matrix e = expm((t * char_generator_2d(model, lambda).matrix()).eval());
  return vectorize(model.rho).dot(e * vectorize(model.X));
}

CharCheck char_fn_check(const DiffusiveModel& model, double lambda, double t, double dt,
                        int n_paths, std::uint64_t seed, int n_threads) {
  DiffusiveSamples samples = simulate_diffusive(model, {t}, dt, n_paths, seed, n_threads);
  return char_check_from_samples(samples, 0, lambda, char_exact(model, lambda, t));
}

CharCheck char_fn_check_2d(const DiffusiveModel& model, double lambda, double t, double dt,
                           int n_paths, std::uint64_t seed, int n_threads) {
  DiffusiveSamples samples = simulate_diffusive_2d(model, {t}, dt, n_paths, seed, n_threads);
  return char_check_from_samples(samples, 0, lambda, char_exact_2d(model, lambda, t));
}

Superoperator counting_generator(const CountingModel& model, double lambda) {
  Superoperator l = Superoperator::left_mult((kImag * model.H).eval()) +
                    Superoperator::right_mult((-kImag * model.H).eval());
  l += (model.mu * std::exp(kImag * lambda)) * Superoperator::sandwich(model.U, model.U.adjoint());
  l -= model.mu * Superoperator::identity(model.dim());
  return l;
}

std::vector<int> simulate_counting(const CountingModel& model, double t, int n_paths,
                                   std::uint64_t seed, int n_threads) {
  if (model.mu <= 0) throw std::invalid_argument("simulate_counting: mu must be positive");
  std::vector<int> counts(n_paths, 0);
  parallel_for(n_paths, n_threads, [&](std::int64_t path) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(path));
    double clock = 0.0;
    int n = 0;
    while (true) {
      clock += rng.exponential(model.mu);
      if (clock > t) break;
      ++n;
    }
    counts[path] = n;
  });
  return counts;
}

CharCheck counting_char_check(const CountingModel& model, double lambda, double t,
                              const std::vector<int>& counts) {
  const int dim = model.dim();
  Matrix rho = Matrix::Identity(dim, dim) / static_cast<double>(dim);
  Matrix e = expm((t * counting_generator(model, lambda).matrix()).eval());
  Complex exact = vectorize(rho).dot(e * vectorize(Matrix::Identity(dim, dim)));

  const int n = static_cast<int>(counts.size());
  Complex sum = 0.0;
  double sum_re2 = 0.0, sum_im2 = 0.0;
  for (int c : counts) {
    Complex v = std::exp(kImag * lambda * static_cast<double>(c));
    sum += v;
    sum_re2 += v.real() * v.real();
    sum_im2 += v.imag() * v.imag();
  }
  CharCheck out;
  out.mc = sum / static_cast<double>(n);
  out.exact = exact;
  out.se_re = std::sqrt(std::max(0.0, sum_re2 / n - out.mc.real() * out.mc.real()) / n);
  out.se_im = std::sqrt(std::max(0.0, sum_im2 / n - out.mc.imag() * out.mc.imag()) / n);
  out.z_re = out.se_re > 0 ? (out.mc.real() - exact.real()) / out.se_re : 0.0;
  out.z_im = out.se_im > 0 ? (out.mc.imag() - exact.imag()) / out.se_im : 0.0;
  return out;
}

bool GirsanovReport::pass(double z_bound) const {
  for (const auto& row : rows)
    if (std::abs(row.mean_z) > z_bound || std::abs(row.var_z) > z_bound) return false;
  return ez_se > 0 ? std::abs(ez - 1.0) / ez_se <= z_bound : true;
}

GirsanovReport girsanov_reference(const std::function<double(double)>& theta, double t_final,
                                  double dt, int n_paths, std::uint64_t seed,
                                  const std::vector<double>& check_times, int n_threads) {
  std::vector<int> steps = record_steps(check_times, dt);
  int total_steps = static_cast<int>(std::llround(t_final / dt));
  const int n_checks = static_cast<int>(check_times.size());

  // per path: Z_T and B̃ at check times
  std::vector<double> z_final(n_paths);
  std::vector<std::vector<double>> btilde(n_checks, std::vector<double>(n_paths));
  parallel_for(n_paths, n_threads, [&](std::int64_t path) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(path));
    double b = 0.0, i_theta_db = 0.0, i_theta2 = 0.0, i_theta = 0.0;
    std::size_t next = 0;
    auto record_if_due = [&](int k) {
      while (next < steps.size() && steps[next] == k) {
        btilde[next][path] = b + i_theta;
        ++next;
      }
    };
    record_if_due(0);
    const double sqrt_dt = std::sqrt(dt);
    for (int k = 1; k <= total_steps; ++k) {
      double th = theta((k - 1) * dt);
      double db = sqrt_dt * rng.normal();
      b += db;
      i_theta_db += th * db;
      i_theta2 += th * th * dt;
      i_theta += th * dt;
      record_if_due(k);
    }
    z_final[path] = std::exp(-i_theta_db - 0.5 * i_theta2);
  });

  GirsanovReport rep;
  double ez_sum = 0.0, ez_sum2 = 0.0;
  for (int p = 0; p < n_paths; ++p) {
    ez_sum += z_final[p];
    ez_sum2 += z_final[p] * z_final[p];
  }
  rep.ez = ez_sum / n_paths;
  rep.ez_se = std::sqrt(std::max(0.0, ez_sum2 / n_paths - rep.ez * rep.ez) / n_paths);

  for (int c = 0; c < n_checks; ++c) {
    GirsanovRow row;
    row.t = check_times[c];
    double s1 = 0, s1_2 = 0, s2 = 0, s2_2 = 0;
    for (int p = 0; p < n_paths; ++p) {
      double wb = z_final[p] * btilde[c][p];
      double wb2 = z_final[p] * btilde[c][p] * btilde[c][p];
      s1 += wb;
      s1_2 += wb * wb;
      s2 += wb2;
      s2_2 += wb2 * wb2;
    }
    row.weighted_mean = s1 / n_paths;
    row.mean_se = std::sqrt(std::max(0.0, s1_2 / n_paths - row.weighted_mean * row.weighted_mean) /
                            n_paths);
    row.mean_z = row.mean_se > 0 ? row.weighted_mean / row.mean_se : 0.0;
    row.weighted_var = s2 / n_paths;
    row.var_se =
        std::sqrt(std::max(0.0, s2_2 / n_paths - row.weighted_var * row.weighted_var) / n_paths);
    row.var_z = row.var_se > 0 ? (row.weighted_var - row.t) / row.var_se : 0.0;
    rep.rows.push_back(row);
  }
  return rep;
}

std::vector<double> em_strong_errors(const DiffusiveModel& model, double t, double base_dt,
                                     int n_levels, int n_paths, std::uint64_t seed) {
  if (model.dim() != 1)
    throw std::invalid_argument("em_strong_errors: closed-form comparison requires D = 1");
  // scalar reduction of the model
  Complex l0 = build_L0(model.g).matrix()(0, 0);
  Complex nn = model.sigma * (model.R(0, 0) + std::conj(model.R(0, 0))) + model.m;
  Complex rho = model.rho(0, 0), x = model.X(0, 0);

  int refine = 1 << (n_levels - 1);
  double fine_dt = base_dt / refine;
  int fine_steps = static_cast<int>(std::llround(t / fine_dt));
  std::vector<double> abs_err(n_levels, 0.0);

  std::vector<double> fine_db(fine_steps);
  for (int p = 0; p < n_paths; ++p) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(p));
    double b_total = 0.0;
    double sqrt_fine = std::sqrt(fine_dt);
    for (int k = 0; k < fine_steps; ++k) {
      fine_db[k] = sqrt_fine * rng.normal();
      b_total += fine_db[k];
    }
    Complex z_exact = rho * std::exp(t * (l0 - 0.5 * nn * nn) + b_total * nn) * x;
    for (int lev = 0; lev < n_levels; ++lev) {
      int agg = 1 << (n_levels - 1 - lev);  // fine steps per coarse step
      double dt_lev = fine_dt * agg;
      Complex z = rho;
      for (int k = 0; k < fine_steps; k += agg) {
        double db = 0.0;
        for (int j = 0; j < agg; ++j) db += fine_db[k + j];
        z *= (1.0 + dt_lev * l0 + db * nn);
      }
      abs_err[lev] += std::abs(z * x - z_exact);
    }
  }
  for (double& e : abs_err) e /= n_paths;
  return abs_err;
}

Complex discrete_scheme_char_value(const DiffusiveModel& model, double lambda, double t,
                                   double delta) {
  const int dim = model.dim();
  Matrix q = lindblad_q(LindbladGenerator{model.g.H, {model.R}});
  Matrix a_plus = Matrix::Identity(dim, dim) + delta * q + std::sqrt(delta) * model.R;
  Matrix a_minus = Matrix::Identity(dim, dim) + delta * q - std::sqrt(delta) * model.R;
  Matrix phi = 0.5 * (std::exp(kImag * lambda * std::sqrt(delta)) *
                          Superoperator::sandwich(a_plus, a_plus.adjoint()).matrix() +
                      std::exp(-kImag * lambda * std::sqrt(delta)) *
                          Superoperator::sandwich(a_minus, a_minus.adjoint()).matrix());
  int n = static_cast<int>(std::llround(t / delta));
  Matrix pow = Matrix::Identity(dim * dim, dim * dim);
  for (int k = 0; k < n; ++k) pow = pow * phi;
  return vectorize(model.rho).dot(pow * vectorize(model.X));
}

}  // namespace stochmps
