#ifndef STOCHMPS_JSON_IO_HPP
#define STOCHMPS_JSON_IO_HPP

#include <json.hpp>
#include <string>

#include "stochmps/market.hpp"
#include "stochmps/projection.hpp"

// Model files are JSON objects with a `schema: 1` field and a `kind`
// discriminator. Complex numbers are strictly [re, im] arrays; matrices are
// arrays of rows of complex entries. NaN/Inf are rejected at parse.

namespace stochmps {

using Json = nlohmann::json;

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const Json& j);

Matrix parse_matrix(const Json& j);
RealMatrix parse_real_matrix(const Json& j);
RealVector parse_real_vector(const Json& j);
Json matrix_to_json(const Matrix& m);
Json real_matrix_to_json(const RealMatrix& m);
Json real_vector_to_json(const RealVector& v);

std::string model_kind(const Json& j);  // validates schema field

StochasticMPS parse_smps(const Json& j);
Json smps_to_json(const StochasticMPS& s);

LindbladGenerator parse_lindblad(const Json& j);
Json lindblad_to_json(const LindbladGenerator& g);

DiffusiveModel parse_diffusive(const Json& j);
Json diffusive_to_json(const DiffusiveModel& m);

CountingModel parse_counting(const Json& j);
Json counting_to_json(const CountingModel& m);

ProjectionFamily parse_projection(const Json& j);
Json projection_to_json(const ProjectionFamily& f);

MarketCase1 parse_market1(const Json& j);
Json market1_to_json(const MarketCase1& c);

MarketCase2 parse_market2(const Json& j);
Json market2_to_json(const MarketCase2& c);

BirthDeathBlocks parse_birth_death(const Json& j);
Json birth_death_to_json(const BirthDeathBlocks& b);

struct RateMatrixModel {
  RealMatrix g;
  RealVector p0;
};
RateMatrixModel parse_rate_matrix(const Json& j);
Json rate_matrix_to_json(const RateMatrixModel& m);

}  // namespace stochmps

#endif
