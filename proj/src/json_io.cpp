#include "stochmps/json_io.hpp"

#include <cmath>
#include <fstream>

namespace stochmps {

namespace {

double checked_number(const Json& j, const char* what) {
  if (!j.is_number()) throw ParseError(std::string(what) + ": expected a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) throw ParseError(std::string(what) + ": NaN/Inf rejected");
  return v;
}

Complex parse_complex(const Json& j) {
  if (!j.is_array() || j.size() != 2)
    throw ParseError("complex values must be [re, im] arrays");
  return {checked_number(j[0], "complex"), checked_number(j[1], "complex")};
}

Json complex_to_json(Complex c) { return Json::array({c.real(), c.imag()}); }

}  // namespace

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file: " + path);
  try {
    return Json::parse(in);  // nlohmann reports line/column in the message
  } catch (const Json::exception& e) {
    throw ParseError(std::string("JSON parse error in ") + path + ": " + e.what());
  }
}

void save_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write file: " + path);
  out << j.dump(2) << "\n";
}

Matrix parse_matrix(const Json& j) {
  if (!j.is_array() || j.empty()) throw ParseError("matrix: expected a nonempty array of rows");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != cols)
      throw ParseError("matrix: ragged rows");
    for (int c = 0; c < cols; ++c) m(r, c) = parse_complex(j[r][c]);
  }
  return m;
}

RealMatrix parse_real_matrix(const Json& j) {
  if (!j.is_array() || j.empty()) throw ParseError("real matrix: expected rows");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  RealMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols) throw ParseError("real matrix: ragged rows");
    for (int c = 0; c < cols; ++c) m(r, c) = checked_number(j[r][c], "real matrix");
  }
  return m;
}

RealVector parse_real_vector(const Json& j) {
  if (!j.is_array()) throw ParseError("real vector: expected an array");
  RealVector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = checked_number(j[i], "real vector");
  return v;
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json real_matrix_to_json(const RealMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json real_vector_to_json(const RealVector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

std::string model_kind(const Json& j) {
  if (!j.is_object() || !j.contains("schema") || j["schema"] != 1)
    throw ParseError("model file must carry schema: 1");
  if (!j.contains("kind")) throw ParseError("model file must carry a kind field");
  return j["kind"].get<std::string>();
}

namespace {

std::vector<Matrix> parse_matrix_list(const Json& j) {
  std::vector<Matrix> out;
  for (const auto& m : j) out.push_back(parse_matrix(m));
  return out;
}

Json matrix_list_to_json(const std::vector<Matrix>& ms) {
  Json out = Json::array();
  for (const auto& m : ms) out.push_back(matrix_to_json(m));
  return out;
}

}  // namespace

StochasticMPS parse_smps(const Json& j) {
  StochasticMPS s;
  s.n_sites = j.at("n_sites").get<int>();
  auto parse_site = [&](const Json& sj) {
    SiteFamily site;
    for (const auto& symbol : sj) site.kraus.push_back(parse_matrix_list(symbol));
    return site;
  };
  if (j.contains("shared_site")) {
    s.sites.push_back(parse_site(j["shared_site"]));
  } else {
    for (const auto& sj : j.at("sites")) s.sites.push_back(parse_site(sj));
    if (static_cast<int>(s.sites.size()) != s.n_sites)
      throw ParseError("smps: sites array must match n_sites");
  }
  s.rho = parse_matrix(j.at("rho"));
  s.closure = parse_matrix(j.at("closure"));
  return s;
}

Json smps_to_json(const StochasticMPS& s) {
  Json j{{"schema", 1}, {"kind", "smps"}, {"n_sites", s.n_sites}};
  auto site_json = [&](const SiteFamily& site) {
    Json sj = Json::array();
    for (const auto& symbol : site.kraus) sj.push_back(matrix_list_to_json(symbol));
    return sj;
  };
  if (s.sites.size() == 1) {
    j["shared_site"] = site_json(s.sites.front());
  } else {
    Json sites = Json::array();
    for (const auto& site : s.sites) sites.push_back(site_json(site));
    j["sites"] = sites;
  }
  j["rho"] = matrix_to_json(s.rho);
  j["closure"] = matrix_to_json(s.closure);
  return j;
}

LindbladGenerator parse_lindblad(const Json& j) {
  LindbladGenerator g;
  g.H = parse_matrix(j.at("H"));
  if (j.contains("Rs")) g.Rs = parse_matrix_list(j["Rs"]);
  return g;
}

Json lindblad_to_json(const LindbladGenerator& g) {
  return Json{{"schema", 1},
              {"kind", "lindblad"},
              {"H", matrix_to_json(g.H)},
              {"Rs", matrix_list_to_json(g.Rs)}};
}

DiffusiveModel parse_diffusive(const Json& j) {
  DiffusiveModel m;
  m.g = parse_lindblad(j);
  m.R = parse_matrix(j.at("R"));
  m.sigma = checked_number(j.at("sigma"), "sigma");
  m.m = checked_number(j.at("m"), "m");
  m.rho = parse_matrix(j.at("rho"));
  m.X = j.contains("X") ? parse_matrix(j["X"])
                        : Matrix(Matrix::Identity(m.g.dim(), m.g.dim()));
  return m;
}

Json diffusive_to_json(const DiffusiveModel& m) {
  Json j = lindblad_to_json(m.g);
  j["kind"] = "diffusive";
  j["R"] = matrix_to_json(m.R);
  j["sigma"] = m.sigma;
  j["m"] = m.m;
  j["rho"] = matrix_to_json(m.rho);
  j["X"] = matrix_to_json(m.X);
  return j;
}

CountingModel parse_counting(const Json& j) {
  CountingModel m;
  m.H = parse_matrix(j.at("H"));
  m.U = parse_matrix(j.at("U"));
  m.mu = checked_number(j.at("mu"), "mu");
  return m;
}

Json counting_to_json(const CountingModel& m) {
  return Json{{"schema", 1},
              {"kind", "counting"},
              {"H", matrix_to_json(m.H)},
              {"U", matrix_to_json(m.U)},
              {"mu", m.mu}};
}

ProjectionFamily parse_projection(const Json& j) {
  ProjectionFamily f;
  f.n_out = j.at("n_out").get<int>();
  f.n_in = j.at("n_in").get<int>();
  for (const auto& bi : j.at("blocks")) f.blocks.push_back(parse_matrix_list(bi));
  if (static_cast<int>(f.blocks.size()) != f.n_out)
    throw ParseError("projection: blocks must have n_out rows");
  return f;
}

Json projection_to_json(const ProjectionFamily& f) {
  Json blocks = Json::array();
  for (const auto& bi : f.blocks) blocks.push_back(matrix_list_to_json(bi));
  return Json{{"schema", 1},
              {"kind", "projection"},
              {"n_out", f.n_out},
              {"n_in", f.n_in},
              {"blocks", blocks}};
}

MarketCase1 parse_market1(const Json& j) {
  MarketCase1 c;
  c.alpha = checked_number(j.at("alpha"), "alpha");
  c.r = checked_number(j.at("r"), "r");
  c.sigma = checked_number(j.at("sigma"), "sigma");
  c.g = parse_lindblad(j);
  c.R = parse_matrix(j.at("R"));
  c.rho = parse_matrix(j.at("rho"));
  if (j.contains("X")) c.X = parse_matrix(j["X"]);
  return c;
}

Json market1_to_json(const MarketCase1& c) {
  Json j = lindblad_to_json(c.g);
  j["kind"] = "market1";
  j["alpha"] = c.alpha;
  j["r"] = c.r;
  j["sigma"] = c.sigma;
  j["R"] = matrix_to_json(c.R);
  j["rho"] = matrix_to_json(c.rho);
  if (c.X) j["X"] = matrix_to_json(*c.X);
  return j;
}

MarketCase2 parse_market2(const Json& j) {
  MarketCase2 c;
  c.alpha = checked_number(j.at("alpha"), "alpha");
  c.r = checked_number(j.at("r"), "r");
  c.sigma = checked_number(j.at("sigma"), "sigma");
  c.m = checked_number(j.at("m"), "m");
  c.s0 = j.contains("s0") ? checked_number(j["s0"], "s0") : 1.0;
  c.g = parse_lindblad(j);
  c.R = parse_matrix(j.at("R"));
  c.rho = parse_matrix(j.at("rho"));
  if (j.contains("X")) c.X = parse_matrix(j["X"]);
  return c;
}

Json market2_to_json(const MarketCase2& c) {
  Json j = lindblad_to_json(c.g);
  j["kind"] = "market2";
  j["alpha"] = c.alpha;
  j["r"] = c.r;
  j["sigma"] = c.sigma;
  j["m"] = c.m;
  j["s0"] = c.s0;
  j["R"] = matrix_to_json(c.R);
  j["rho"] = matrix_to_json(c.rho);
  if (c.X) j["X"] = matrix_to_json(*c.X);
  return j;
}

BirthDeathBlocks parse_birth_death(const Json& j) {
  BirthDeathBlocks b;
  if (j.contains("lambda")) {  // classical shorthand
    RealVector lambda = parse_real_vector(j["lambda"]);
    RealVector mu = parse_real_vector(j["mu"]);
    return classical_birth_death_blocks(lambda, mu);
  }
  b.n_max = j.at("n_max").get<int>();
  b.internal_dim = j.at("internal_dim").get<int>();
  b.diag = parse_matrix_list(j.at("diag"));
  b.birth = parse_matrix_list(j.at("birth"));
  b.death = parse_matrix_list(j.at("death"));
  return b;
}

Json birth_death_to_json(const BirthDeathBlocks& b) {
  return Json{{"schema", 1},           {"kind", "birthdeath"},
              {"n_max", b.n_max},      {"internal_dim", b.internal_dim},
              {"diag", matrix_list_to_json(b.diag)},
              {"birth", matrix_list_to_json(b.birth)},
              {"death", matrix_list_to_json(b.death)}};
}

RateMatrixModel parse_rate_matrix(const Json& j) {
  RateMatrixModel m;
  m.g = parse_real_matrix(j.at("G"));
  m.p0 = parse_real_vector(j.at("p0"));
  return m;
}

Json rate_matrix_to_json(const RateMatrixModel& m) {
  return Json{{"schema", 1},
              {"kind", "ratematrix"},
              {"G", real_matrix_to_json(m.g)},
              {"p0", real_vector_to_json(m.p0)}};
}

}  // namespace stochmps
