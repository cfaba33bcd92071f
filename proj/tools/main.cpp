#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "stochmps/ising.hpp"
#include "stochmps/json_io.hpp"
#include "stochmps/market.hpp"

using namespace stochmps;

namespace {

constexpr std::uint64_t kDefaultSeed = 20240901ULL;

struct Options {
  std::string model;
  std::string out;
  std::uint64_t seed = kDefaultSeed;
  int paths = 100000;
  double dt = 1e-3;
  double t = 1.0;
  double tol = 1e-10;
  int threads = 1;
  bool no_header = false;
};

// CSV sink: file when --out is given, stdout otherwise. The header line is
// timestamped and can be disabled for byte-identical reruns.
class Csv {
 public:
  Csv(const Options& opt, const std::string& command) {
    if (!opt.out.empty()) {
      file_.open(opt.out);
      if (!file_) throw ParseError("cannot open output file: " + opt.out);
    }
    if (!opt.no_header) {
      auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
      stream() << "# stochmps " << command << " seed=" << opt.seed << " generated="
               << now << "\n";
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  for (double v : parse_list(csv)) out.push_back(static_cast<int>(v));
  return out;
}

int finish(const std::string& command, const Json& params, bool pass, const Json& metrics,
           int fail_code = 2) {
  Json summary{{"command", command}, {"params", params}, {"pass", pass}, {"metrics", metrics}};
  std::cout << summary.dump() << "\n";
  return pass ? 0 : fail_code;
}

std::vector<double> default_grid(double t_final) {
  std::vector<double> g;
  for (int k = 1; k <= 5; ++k) g.push_back(t_final * k / 5.0);
  return g;
}

StochasticMPS load_smps_model(const Options& opt) {
  Json j = load_json_file(opt.model);
  std::string kind = model_kind(j);
  if (kind == "smps") return parse_smps(j);
  if (kind == "bform") {
    std::vector<RealMatrix> b;
    for (const auto& bx : j.at("b")) b.push_back(parse_real_matrix(bx));
    return from_elementwise_positive(b, parse_real_vector(j.at("left")),
                                     parse_real_vector(j.at("right")), j.at("n_sites").get<int>());
  }
  if (kind == "markov")
    return markov_embedding(parse_real_matrix(j.at("T")), parse_real_vector(j.at("pi")),
                            j.at("n_sites").get<int>());
  if (kind == "memory")
    return finite_memory_embedding(parse_real_matrix(j.at("T")), parse_real_vector(j.at("p0")),
                                   j.at("d").get<int>(), j.at("k").get<int>(),
                                   j.at("n_sites").get<int>());
  throw ParseError("expected an smps-like model, got kind: " + kind);
}

int cmd_validate(const Options& opt) {
  StochasticMPS s = load_smps_model(opt);
  ValidationReport rep = validate(s, opt.tol > 1e-10 ? opt.tol : 1e-8);
  Csv csv(opt, "validate");
  csv.stream() << "site,normalization_residual\n";
  for (std::size_t j = 0; j < rep.site_residuals.size(); ++j)
    csv.stream() << j << "," << rep.site_residuals[j] << "\n";
  Json metrics{{"total_probability", rep.total_probability},
               {"rho_trace_residual", rep.rho_trace_residual},
               {"rho_min_eigenvalue", rep.rho_min_eigenvalue},
               {"closure_min_eigenvalue", rep.closure_min_eigenvalue},
               {"summary", rep.summary()}};
  return finish("validate", {{"model", opt.model}}, rep.pass, metrics, 1);
}

int cmd_joint(const Options& opt, const std::string& trajectory) {
  StochasticMPS s = load_smps_model(opt);
  Csv csv(opt, "joint");
  csv.stream() << "trajectory,probability\n";
  double total = 0.0;
  if (!trajectory.empty()) {
    Trajectory traj(parse_int_list(trajectory));
    double p = joint_probability(s, traj);
    csv.stream() << "\"" << trajectory << "\"," << p << "\n";
    total = p;
  } else {
    long n_traj = 1;
    for (int j = 0; j < s.n_sites; ++j) {
      n_traj *= s.d();
      if (n_traj > 4096) throw std::invalid_argument("joint: enumeration infeasible; pass --trajectory");
    }
    Trajectory traj(s.n_sites, 0);
    for (long idx = 0; idx < n_traj; ++idx) {
      long rem = idx;
      for (int j = s.n_sites - 1; j >= 0; --j) {
        traj[j] = static_cast<int>(rem % s.d());
        rem /= s.d();
      }
      double p = joint_probability(s, traj);
      total += p;
      std::string label;
      for (int x : traj) label += std::to_string(x);
      csv.stream() << label << "," << p << "\n";
    }
  }
  bool pass = trajectory.empty() ? std::abs(total - 1.0) <= 1e-9 : true;
  return finish("joint", {{"model", opt.model}}, pass,
                {{"total_probability", total}});
}

int cmd_marginal(const Options& opt, int site) {
  StochasticMPS s = load_smps_model(opt);
  Csv csv(opt, "marginal");
  csv.stream() << "site,symbol,probability\n";
  double worst = 0.0;
  auto emit = [&](int n) {
    RealVector p = marginal_at(s, n);
    RealVector q = discrete_marginal_evolution(s, n);
    worst = std::max(worst, (p - q).cwiseAbs().maxCoeff());
    for (int x = 0; x < s.d(); ++x) csv.stream() << n << "," << x << "," << p(x) << "\n";
  };
  if (site > 0)
    emit(site);
  else
    for (int n = 1; n <= s.n_sites; ++n) emit(n);
  return finish("marginal", {{"model", opt.model}, {"site", site}}, worst <= 1e-10,
                {{"route_disagreement", worst}});
}

int cmd_sample(const Options& opt) {
  StochasticMPS s = load_smps_model(opt);
  auto paths = sample_trajectories(s, opt.paths, opt.seed, opt.threads);
  Csv csv(opt, "sample");
  for (const auto& traj : paths) {
    for (std::size_t j = 0; j < traj.size(); ++j)
      csv.stream() << traj[j] << (j + 1 < traj.size() ? "," : "");
    csv.stream() << "\n";
  }
  return finish("sample", {{"model", opt.model}, {"paths", opt.paths}, {"seed", opt.seed}}, true,
                Json::object());
}

int cmd_embed(const Options& opt) {
  StochasticMPS s = load_smps_model(opt);
  if (opt.out.empty()) throw ParseError("embed: --out path for the sMPS JSON is required");
  save_json_file(opt.out, smps_to_json(s));
  ValidationReport rep = validate(s);
  return finish("embed", {{"model", opt.model}, {"out", opt.out}}, rep.pass,
                {{"total_probability", rep.total_probability}}, 1);
}

int cmd_block(const Options& opt, int block_len) {
  StochasticMPS s = load_smps_model(opt);
  BlockingReport rep = markovize_by_blocking(s, block_len);
  Csv csv(opt, "block");
  csv.stream() << "tuple,class\n";
  for (int t = 0; t < rep.n_tuples; ++t) csv.stream() << t << "," << rep.tuple_class[t] << "\n";
  Json metrics{{"n_classes", rep.n_classes},
               {"blocked_kraus_rank", rep.blocked_kraus_rank},
               {"rank_condition_met", rep.rank_condition_met},
               {"structure_residual", rep.structure_residual},
               {"chapman_kolmogorov_residual", rep.chapman_kolmogorov_residual},
               {"class_transition", real_matrix_to_json(rep.class_transition)}};
  bool pass = rep.structure_residual <= opt.tol && rep.chapman_kolmogorov_residual <= opt.tol;
  return finish("block", {{"model", opt.model}, {"L", block_len}}, pass, metrics);
}

int cmd_decay(const Options& opt, int k, int l, const std::string& gaps) {
  StochasticMPS s = load_smps_model(opt);
  std::vector<int> gap_list = gaps.empty() ? std::vector<int>{1, 2, 3, 4} : parse_int_list(gaps);
  DecayScan scan = correlation_decay_scan(s, k, l, gap_list);
  Csv csv(opt, "decay");
  csv.stream() << "gap,l1_distance\n";
  for (const auto& row : scan.rows) csv.stream() << row.gap << "," << row.distance << "\n";
  return finish("decay", {{"model", opt.model}, {"k", k}, {"l", l}}, true,
                {{"fitted_rate", scan.fitted_rate},
                 {"transfer_gap_rate", scan.transfer_gap_rate}});
}

int cmd_master(const Options& opt) {
  RateMatrixModel m = parse_rate_matrix(load_json_file(opt.model));
  Csv csv(opt, "master");
  csv.stream() << "t";
  for (int k = 0; k < m.p0.size(); ++k) csv.stream() << ",p" << k;
  csv.stream() << "\n";
  double worst = 0.0;
  const int n_rows = 20;
  for (int row = 0; row <= n_rows; ++row) {
    double t = opt.t * row / n_rows;
    RealVector p = classical_master_reference(m.g, m.p0, t);
    RealVector q = classical_master_rk4(m.g, m.p0, t, opt.dt);
    worst = std::max(worst, (p - q).cwiseAbs().maxCoeff());
    csv.stream() << t;
    for (int k = 0; k < p.size(); ++k) csv.stream() << "," << p(k);
    csv.stream() << "\n";
  }
  return finish("master", {{"model", opt.model}, {"t", opt.t}}, worst <= 1e-8,
                {{"rk4_vs_expm", worst}});
}

int cmd_birthdeath(const Options& opt) {
  BirthDeathBlocks blocks = parse_birth_death(load_json_file(opt.model));
  BirthDeathGenerator gen = birth_death_generator(blocks);
  const int levels = blocks.n_max + 1;
  const int dim = levels * blocks.internal_dim;
  Matrix rho = Matrix::Zero(dim, dim);
  int start = std::min(blocks.n_max, levels / 4);
  rho.block(start * blocks.internal_dim, start * blocks.internal_dim, blocks.internal_dim,
            blocks.internal_dim) =
      Matrix::Identity(blocks.internal_dim, blocks.internal_dim) /
      static_cast<double>(blocks.internal_dim);

  Csv csv(opt, "birthdeath");
  csv.stream() << "t";
  for (int n = 0; n < levels; ++n) csv.stream() << ",p" << n;
  csv.stream() << "\n";
  double worst_rate_sum = 0.0;
  const int n_rows = 10;
  for (int row = 0; row <= n_rows; ++row) {
    double t = opt.t * row / n_rows;
    RealVector p = continuous_marginal_distribution(gen.total, levels, gen.projectors, rho, t);
    RealVector rates = continuous_marginal_rates(gen.total, gen.rates, rho, t);
    worst_rate_sum = std::max(worst_rate_sum, std::abs(rates.sum()));
    csv.stream() << t;
    for (int n = 0; n < levels; ++n) csv.stream() << "," << p(n);
    csv.stream() << "\n";
  }
  Json metrics{{"consistency_residual", gen.consistency_residual},
               {"max_rate_sum", worst_rate_sum}};
  bool pass = worst_rate_sum <= 1e-10;
  if (blocks.internal_dim == 1) {
    RealVector lambda(levels), mu(levels);
    for (int n = 0; n < levels; ++n) {
      lambda(n) = n < blocks.n_max ? std::norm(blocks.birth[n](0, 0)) : 0.0;
      mu(n) = n > 0 ? std::norm(blocks.death[n](0, 0)) : 0.0;
    }
    RealVector p0 = RealVector::Zero(levels);
    p0(start) = 1.0;
    RealVector classical = classical_master_rk4(birth_death_rate_matrix(lambda, mu), p0, opt.t,
                                                std::min(opt.dt, 1e-3));
    RealVector quantum =
        continuous_marginal_distribution(gen.total, levels, gen.projectors, rho, opt.t);
    double diff = (classical - quantum).cwiseAbs().maxCoeff();
    metrics["classical_oracle_diff"] = diff;
    pass = pass && diff <= 1e-8;
  }
  return finish("birthdeath", {{"model", opt.model}, {"t", opt.t}}, pass, metrics);
}

int cmd_qsde(const Options& opt) {
  DiffusiveModel model = parse_diffusive(load_json_file(opt.model));
  std::vector<double> grid = default_grid(opt.t);
  for (double& g : grid) g = std::round(g / opt.dt) * opt.dt;
  DiffusiveSamples samples =
      simulate_diffusive(model, grid, opt.dt, opt.paths, opt.seed, opt.threads);
  Csv csv(opt, "qsde");
  csv.stream() << "t,mean_re,mean_im,se,z\n";
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CharCheck c = char_check_from_samples(samples, static_cast<int>(i), 0.0, Complex(1.0, 0.0));
    worst = std::max(worst, c.max_z());
    csv.stream() << grid[i] << "," << c.mc.real() << "," << c.mc.imag() << "," << c.se_re << ","
                 << c.z_re << "\n";
  }
  return finish("qsde",
                {{"model", opt.model}, {"paths", opt.paths}, {"dt", opt.dt}, {"seed", opt.seed}},
                worst <= 3.0, {{"max_abs_z", worst}});
}

int cmd_charfn(const Options& opt, const std::string& lambdas, bool two_driver) {
  DiffusiveModel model = parse_diffusive(load_json_file(opt.model));
  std::vector<double> lambda_list = lambdas.empty() ? std::vector<double>{0.5, 1.0, 2.0}
                                                    : parse_list(lambdas);
  std::vector<double> times{0.5 * opt.t, opt.t};
  for (double& g : times) g = std::round(g / opt.dt) * opt.dt;
  DiffusiveSamples samples =
      two_driver ? simulate_diffusive_2d(model, times, opt.dt, opt.paths, opt.seed, opt.threads)
                 : simulate_diffusive(model, times, opt.dt, opt.paths, opt.seed, opt.threads);
  Csv csv(opt, "charfn");
  csv.stream() << "lambda,t,mc_re,mc_im,exact_re,exact_im,se_re,se_im,z_re,z_im\n";
  double worst = 0.0;
  for (double lambda : lambda_list)
    for (std::size_t i = 0; i < times.size(); ++i) {
      Complex exact = two_driver ? char_exact_2d(model, lambda, times[i])
                                 : char_exact(model, lambda, times[i]);
      CharCheck c = char_check_from_samples(samples, static_cast<int>(i), lambda, exact);
      worst = std::max(worst, c.max_z());
      csv.stream() << lambda << "," << times[i] << "," << c.mc.real() << "," << c.mc.imag() << ","
                   << exact.real() << "," << exact.imag() << "," << c.se_re << "," << c.se_im
                   << "," << c.z_re << "," << c.z_im << "\n";
    }
  return finish("charfn",
                {{"model", opt.model},
                 {"paths", opt.paths},
                 {"dt", opt.dt},
                 {"seed", opt.seed},
                 {"two_driver", two_driver}},
                worst <= 3.0, {{"max_abs_z", worst}});
}

int cmd_counting(const Options& opt, const std::string& lambdas) {
  CountingModel model = parse_counting(load_json_file(opt.model));
  std::vector<double> lambda_list =
      lambdas.empty() ? std::vector<double>{0.5, 1.0, 2.0} : parse_list(lambdas);
  auto counts = simulate_counting(model, opt.t, opt.paths, opt.seed, opt.threads);
  Csv csv(opt, "counting");
  csv.stream() << "lambda,t,mc_re,mc_im,exact_re,exact_im,z_re,z_im\n";
  double worst = 0.0;
  for (double lambda : lambda_list) {
    CharCheck c = counting_char_check(model, lambda, opt.t, counts);
    worst = std::max(worst, c.max_z());
    csv.stream() << lambda << "," << opt.t << "," << c.mc.real() << "," << c.mc.imag() << ","
                 << c.exact.real() << "," << c.exact.imag() << "," << c.z_re << "," << c.z_im
                 << "\n";
  }
  return finish("counting",
                {{"model", opt.model}, {"paths", opt.paths}, {"t", opt.t}, {"seed", opt.seed}},
                worst <= 3.0, {{"max_abs_z", worst}});
}

int cmd_girsanov(const Options& opt, double theta) {
  std::vector<double> grid = default_grid(opt.t);
  for (double& g : grid) g = std::round(g / opt.dt) * opt.dt;
  GirsanovReport rep = girsanov_reference([theta](double) { return theta; }, opt.t, opt.dt,
                                          opt.paths, opt.seed, grid, opt.threads);
  Csv csv(opt, "girsanov");
  csv.stream() << "t,weighted_mean,mean_se,mean_z,weighted_var,var_se,var_z\n";
  for (const auto& row : rep.rows)
    csv.stream() << row.t << "," << row.weighted_mean << "," << row.mean_se << "," << row.mean_z
                 << "," << row.weighted_var << "," << row.var_se << "," << row.var_z << "\n";
  return finish("girsanov",
                {{"theta", theta}, {"paths", opt.paths}, {"dt", opt.dt}, {"seed", opt.seed}},
                rep.pass(), {{"ez", rep.ez}, {"ez_se", rep.ez_se}});
}

int cmd_project(const Options& opt) {
  Json j = load_json_file(opt.model);
  ProjectionFamily fam = parse_projection(j);
  if (!j.contains("generator") || !j.contains("rho_T"))
    throw ParseError("project: model must carry generator {H, Rs} and rho_T");
  LindbladGenerator g = parse_lindblad(j["generator"]);
  Matrix rho_t = parse_matrix(j["rho_T"]);
  std::vector<double> grid = default_grid(opt.t);
  if (j.contains("t_grid")) {
    RealVector tg = parse_real_vector(j["t_grid"]);
    grid.assign(tg.data(), tg.data() + tg.size());
  }
  auto traj = evolve_projected(fam, g, rho_t, grid);
  Csv csv(opt, "project");
  csv.stream() << "t";
  for (int i = 0; i < fam.n_out; ++i)
    for (int k = 0; k < fam.n_out; ++k) csv.stream() << ",rho_" << i << k << "_re,rho_" << i << k
                                                     << "_im";
  csv.stream() << "\n";
  double worst_trace = 0.0, worst_eig = 0.0;
  for (std::size_t s = 0; s < grid.size(); ++s) {
    worst_trace = std::max(worst_trace, std::abs(traj[s].trace().real() - 1.0));
    worst_eig = std::min(worst_eig, min_eigenvalue(traj[s]));
    csv.stream() << grid[s];
    for (int i = 0; i < fam.n_out; ++i)
      for (int k = 0; k < fam.n_out; ++k)
        csv.stream() << "," << traj[s](i, k).real() << "," << traj[s](i, k).imag();
    csv.stream() << "\n";
  }
  bool pass = worst_trace <= 1e-10 && worst_eig >= -1e-10;
  return finish("project", {{"model", opt.model}}, pass,
                {{"max_trace_defect", worst_trace}, {"min_eigenvalue", worst_eig}});
}

int cmd_multitime(const Options& opt, int n_times) {
  Json j = load_json_file(opt.model);
  ProjectionFamily fam = parse_projection(j);
  Superoperator transfer = Superoperator::identity(fam.n_in);
  if (j.contains("transfer")) {
    std::vector<Matrix> ops;
    for (const auto& m : j["transfer"]) ops.push_back(parse_matrix(m));
    transfer = kraus_to_transfer(ops);
  }
  Matrix rho = j.contains("rho_T") ? parse_matrix(j["rho_T"])
                                   : Matrix(Matrix::Identity(fam.n_in, fam.n_in) /
                                            static_cast<double>(fam.n_in));
  MultiTimeTensor tensor = multitime_joint(fam, transfer, rho, n_times);
  MultiTimeTensor smaller = multitime_joint(fam, transfer, rho, n_times - 1);
  MultiTimeTensor traced = tensor.trace_last();
  double worst = 0.0;
  for (std::size_t i = 0; i < smaller.values.size(); ++i)
    worst = std::max(worst, std::abs(traced.values[i] - smaller.values[i]));
  Csv csv(opt, "multitime");
  csv.stream() << "index,value_re,value_im\n";
  for (std::size_t i = 0; i < tensor.values.size(); ++i)
    csv.stream() << i << "," << tensor.values[i].real() << "," << tensor.values[i].imag() << "\n";
  return finish("multitime", {{"model", opt.model}, {"N", n_times}}, worst <= 1e-10,
                {{"projectivity_residual", worst}});
}

int cmd_ising(const Options& opt, int n, double beta, long steps, long burn_in,
              const std::string& kernel_name) {
  FlipKernel kernel = kernel_name == "metropolis" ? FlipKernel::Metropolis : FlipKernel::Glauber;
  IsingChain chain{n, beta};
  IsingRun run = metropolis_run(chain, steps, burn_in, opt.seed, kernel,
                                std::max<long>(1, (steps - burn_in) / 1000));
  Csv csv(opt, "ising");
  csv.stream() << "step,magnetization,energy\n";
  for (const auto& s : run.series)
    csv.stream() << s.step << "," << s.magnetization << "," << s.energy << "\n";
  Json metrics{{"mean_magnetization", run.mean_magnetization},
               {"mean_energy", run.mean_energy},
               {"acceptance_rate", run.acceptance_rate}};
  bool pass = true;
  if (run.tv_distance >= 0.0) {
    metrics["tv_distance"] = run.tv_distance;
    metrics["detailed_balance_residual"] = detailed_balance_residual(chain, kernel);
    metrics["stationarity_residual"] =
        stationarity_residual(chain, single_site_kernel(chain, kernel));
    pass = run.tv_distance <= 0.05 &&
           metrics["detailed_balance_residual"].get<double>() <= 1e-12 &&
           metrics["stationarity_residual"].get<double>() <= 1e-12;
  }
  return finish("ising",
                {{"N", n}, {"beta", beta}, {"steps", steps}, {"burn_in", burn_in},
                 {"kernel", kernel_name}, {"seed", opt.seed}},
                pass, metrics);
}

int cmd_market_solve(const Options& opt) {
  Json j = load_json_file(opt.model);
  std::string kind = model_kind(j);
  ClosureSolution sol;
  Json model_with_x;
  if (kind == "market1") {
    MarketCase1 c = parse_market1(j);
    sol = solve_closure(c, 1e-8);
    if (sol.found) {
      c.X = sol.X;
      model_with_x = market1_to_json(c);
    }
  } else if (kind == "market2") {
    MarketCase2 c = parse_market2(j);
    sol = solve_closure(c, 1e-8);
    if (sol.found) {
      c.X = sol.X;
      model_with_x = market2_to_json(c);
    }
  } else {
    throw ParseError("market-solve expects a market1 or market2 model");
  }
  if (sol.found && !opt.out.empty()) save_json_file(opt.out, model_with_x);
  Json metrics{{"summary", sol.summary()},
               {"smallest_singular_value", sol.smallest_sv},
               {"kernel_dim", sol.kernel_dim}};
  if (sol.found) {
    metrics["residual"] = sol.residual;
    metrics["psd"] = sol.psd;
    metrics["X"] = matrix_to_json(sol.X);
  }
  return finish("market-solve", {{"model", opt.model}}, sol.found, metrics, 1);
}

int cmd_market_check(const Options& opt) {
  Json j = load_json_file(opt.model);
  std::string kind = model_kind(j);
  std::vector<double> grid = default_grid(opt.t);
  for (double& g : grid) g = std::round(g / opt.dt) * opt.dt;
  MartingaleReport rep;
  if (kind == "market1") {
    rep = martingale_check(parse_market1(j), grid, opt.dt, opt.paths, opt.seed, opt.threads);
  } else if (kind == "market2") {
    rep = martingale_check(parse_market2(j), grid, opt.dt, opt.paths, opt.seed, opt.threads);
  } else {
    throw ParseError("market-check expects a market1 or market2 model");
  }
  Csv csv(opt, "market-check");
  csv.stream() << "t,mean_dsz,se,z\n";
  for (const auto& row : rep.rows)
    csv.stream() << row.t << "," << row.mean << "," << row.se << "," << row.z << "\n";
  bool pass = rep.max_abs_z() <= 3.0 && rep.n_nonpositive_z == 0;
  return finish("market-check",
                {{"model", opt.model}, {"paths", opt.paths}, {"dt", opt.dt}, {"seed", opt.seed}},
                pass,
                {{"max_abs_z", rep.max_abs_z()},
                 {"baseline", rep.baseline},
                 {"n_nonpositive_z", rep.n_nonpositive_z}});
}

int cmd_thermo_limit(const Options& opt) {
  MarketCase2 c = parse_market2(load_json_file(opt.model));
  ThermoLimitReport rep =
      thermodynamic_limit_check(c, opt.t, opt.dt, opt.paths, opt.seed, opt.threads);
  Csv csv(opt, "thermo-limit");
  csv.stream() << "feasible,closure_residual,l0_residual,proportionality_residual,em_error,"
                  "em_error_half_dt,lag1_autocorr,lag1_z\n";
  csv.stream() << rep.feasible << "," << rep.closure_residual << "," << rep.l0_residual << ","
               << rep.proportionality_residual << "," << rep.girsanov_em_error << ","
               << rep.girsanov_em_error_half_dt << "," << rep.lag1_autocorr << "," << rep.lag1_z
               << "\n";
  bool pass = rep.feasible && rep.proportionality_residual <= opt.tol &&
              std::abs(rep.lag1_z) <= 3.0;
  Json metrics{{"summary", rep.summary()}};
  if (rep.feasible) metrics["X"] = matrix_to_json(rep.X);
  return finish("thermo-limit",
                {{"model", opt.model}, {"paths", opt.paths}, {"dt", opt.dt}, {"seed", opt.seed}},
                pass, metrics);
}

int cmd_write_examples(const std::string& dir) {
  // i.i.d. coin
  {
    KrausFamily f;
    f.ops = {Matrix::Constant(1, 1, 1.0 / std::sqrt(2.0)),
             Matrix::Constant(1, 1, 1.0 / std::sqrt(2.0))};
    StochasticMPS s;
    s.n_sites = 8;
    s.sites = {SiteFamily::from_single(f)};
    s.rho = Matrix::Identity(1, 1);
    s.closure = Matrix::Identity(1, 1);
    save_json_file(dir + "/iid_coin.json", smps_to_json(s));
  }
  {
    Json j{{"schema", 1}, {"kind", "markov"}, {"n_sites", 8}};
    RealMatrix t(2, 2);
    t << 0.9, 0.2, 0.1, 0.8;
    RealVector pi(2);
    pi << 0.5, 0.5;
    j["T"] = real_matrix_to_json(t);
    j["pi"] = real_vector_to_json(pi);
    save_json_file(dir + "/markov_chain.json", j);
  }
  {
    DiffusiveModel m;
    m.g.H = Matrix::Zero(2, 2);
    m.g.H << 0.4, Complex(0.1, 0.2), Complex(0.1, -0.2), -0.3;
    Matrix r1(2, 2);
    r1 << 0.2, Complex(0.3, 0.1), 0.0, -0.1;
    m.g.Rs = {r1};
    m.R = Matrix::Zero(2, 2);
    m.R << 0.3, Complex(0.0, 0.2), Complex(0.1, 0.0), -0.2;
    m.sigma = 0.4;
    m.m = 0.2;
    m.rho = Matrix::Zero(2, 2);
    m.rho << 0.6, Complex(0.1, 0.1), Complex(0.1, -0.1), 0.4;
    m.X = Matrix::Identity(2, 2);
    save_json_file(dir + "/diffusive_d2.json", diffusive_to_json(m));
  }
  {
    CountingModel m;
    m.H = Matrix::Zero(2, 2);
    m.U = Matrix::Zero(2, 2);
    m.U(0, 1) = 1.0;
    m.U(1, 0) = 1.0;
    m.mu = 1.2;
    save_json_file(dir + "/counting_swap.json", counting_to_json(m));
  }
  {
    ProjectionFamily fam = random_projection_family(2, 4, 6, 424242);
    Json j = projection_to_json(fam);
    LindbladGenerator g{random_hermitian(4, 77), {0.5 * random_matrix(4, 4, 78)}};
    j["generator"] = lindblad_to_json(g);
    j["rho_T"] = matrix_to_json(random_density(4, 79));
    save_json_file(dir + "/projection_n4.json", j);
  }
  {
    RealVector lambda = RealVector::Constant(21, 0.8), mu = RealVector::Constant(21, 0.5);
    save_json_file(dir + "/birthdeath_classical.json",
                   birth_death_to_json(classical_birth_death_blocks(lambda, mu)));
  }
  {
    RateMatrixModel m;
    m.g = RealMatrix(3, 3);
    m.g << -0.7, 0.3, 0.2, 0.5, -0.9, 0.4, 0.2, 0.6, -0.6;
    m.p0 = RealVector(3);
    m.p0 << 1.0, 0.0, 0.0;
    save_json_file(dir + "/rate_matrix_3.json", rate_matrix_to_json(m));
  }
  save_json_file(dir + "/market_case1.json", market1_to_json(example_case1()));
  save_json_file(dir + "/market_case2.json", market2_to_json(example_case2()));
  save_json_file(dir + "/market_case2_thermo.json", market2_to_json(example_case2_thermo()));
  Json summary{{"command", "write-examples"}, {"pass", true}, {"dir", dir}};
  std::cout << summary.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic matrix product state toolkit"};
  app.require_subcommand(1);

  Options opt;
  auto add_common = [&opt](CLI::App* sub) {
    sub->add_option("--model", opt.model, "model JSON file");
    sub->add_option("--out", opt.out, "output CSV/JSON path (stdout when omitted)");
    sub->add_option("--seed", opt.seed, "64-bit RNG seed");
    sub->add_option("--paths", opt.paths, "Monte-Carlo path count");
    sub->add_option("--dt", opt.dt, "time step");
    sub->add_option("--t", opt.t, "final time");
    sub->add_option("--tol", opt.tol, "tolerance for pass/fail checks");
    sub->add_option("--threads", opt.threads, "worker cap for path-parallel batches");
    sub->add_flag("--no-header", opt.no_header, "suppress the timestamped CSV header");
  };

  std::string trajectory, lambdas, gaps, kernel_name = "glauber", dir = "models";
  int site = 0, block_len = 2, k = 1, l = 1, n_times = 3, ising_n = 6;
  double theta = 0.5, beta = 0.5;
  long steps = 1000000, burn_in = 50000;

  auto* c_validate = app.add_subcommand("validate", "check an sMPS model");
  auto* c_joint = app.add_subcommand("joint", "joint trajectory probabilities");
  c_joint->add_option("--trajectory", trajectory, "comma-separated symbols");
  auto* c_marginal = app.add_subcommand("marginal", "site marginals, both routes");
  c_marginal->add_option("--site", site, "1-based site (0 = all)");
  auto* c_sample = app.add_subcommand("sample", "draw trajectories");
  auto* c_embed = app.add_subcommand("embed", "embed a classical model as an sMPS");
  auto* c_block = app.add_subcommand("block", "blocked Markovization report");
  c_block->add_option("--L", block_len, "block length");
  auto* c_decay = app.add_subcommand("decay", "correlation decay scan");
  c_decay->add_option("--k", k, "first window length");
  c_decay->add_option("--l", l, "second window length");
  c_decay->add_option("--gaps", gaps, "comma-separated gaps");
  auto* c_master = app.add_subcommand("master", "classical master equation");
  auto* c_bd = app.add_subcommand("birthdeath", "birth-death marginal dynamics");
  auto* c_qsde = app.add_subcommand("qsde", "diffusive QSDE martingale check");
  auto* c_charfn = app.add_subcommand("charfn", "characteristic-function identity");
  bool two_driver = false;
  c_charfn->add_option("--lambdas", lambdas, "comma-separated lambda values");
  c_charfn->add_flag("--two-driver", two_driver, "use the two-Brownian model");
  auto* c_counting = app.add_subcommand("counting", "counting-record characteristic check");
  c_counting->add_option("--lambdas", lambdas, "comma-separated lambda values");
  auto* c_girsanov = app.add_subcommand("girsanov", "classical Girsanov reference");
  c_girsanov->add_option("--theta", theta, "constant drift to remove");
  auto* c_project = app.add_subcommand("project", "projected non-Markovian evolution");
  auto* c_multitime = app.add_subcommand("multitime", "multi-time joint tensor");
  c_multitime->add_option("--N", n_times, "number of time slots");
  auto* c_ising = app.add_subcommand("ising", "Glauber/Metropolis Ising sampler");
  c_ising->add_option("--N", ising_n, "number of spins");
  c_ising->add_option("--beta", beta, "inverse temperature");
  c_ising->add_option("--steps", steps, "total steps");
  c_ising->add_option("--burn-in", burn_in, "burn-in steps");
  c_ising->add_option("--kernel", kernel_name, "glauber | metropolis");
  auto* c_msolve = app.add_subcommand("market-solve", "solve the closure condition");
  auto* c_mcheck = app.add_subcommand("market-check", "martingale flatness check");
  auto* c_thermo = app.add_subcommand("thermo-limit", "thermodynamic-limit reduction");
  auto* c_examples = app.add_subcommand("write-examples", "write example model files");
  c_examples->add_option("--dir", dir, "target directory");

  for (CLI::App* sub : app.get_subcommands({})) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_validate->parsed()) return cmd_validate(opt);
    if (c_joint->parsed()) return cmd_joint(opt, trajectory);
    if (c_marginal->parsed()) return cmd_marginal(opt, site);
    if (c_sample->parsed()) return cmd_sample(opt);
    if (c_embed->parsed()) return cmd_embed(opt);
    if (c_block->parsed()) return cmd_block(opt, block_len);
    if (c_decay->parsed()) return cmd_decay(opt, k, l, gaps);
    if (c_master->parsed()) return cmd_master(opt);
    if (c_bd->parsed()) return cmd_birthdeath(opt);
    if (c_qsde->parsed()) return cmd_qsde(opt);
    if (c_charfn->parsed()) return cmd_charfn(opt, lambdas, two_driver);
    if (c_counting->parsed()) return cmd_counting(opt, lambdas);
    if (c_girsanov->parsed()) return cmd_girsanov(opt, theta);
    if (c_project->parsed()) return cmd_project(opt);
    if (c_multitime->parsed()) return cmd_multitime(opt, n_times);
    if (c_ising->parsed()) return cmd_ising(opt, ising_n, beta, steps, burn_in, kernel_name);
    if (c_msolve->parsed()) return cmd_market_solve(opt);
    if (c_mcheck->parsed()) return cmd_market_check(opt);
    if (c_thermo->parsed()) return cmd_thermo_limit(opt);
    if (c_examples->parsed()) return cmd_write_examples(dir);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
