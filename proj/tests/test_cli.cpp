#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

std::string cli() {
  const char* path = std::getenv("STOCHMPS_CLI");
  REQUIRE(path != nullptr);
  return path;
}

std::string models() {
  const char* path = std::getenv("STOCHMPS_MODELS");
  REQUIRE(path != nullptr);
  return path;
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run(const std::string& args) {
  std::string out_file = "cli_stdout.tmp", err_file = "cli_stderr.tmp";
  std::string command = cli() + " " + args + " > " + out_file + " 2> " + err_file;
  int status = std::system(command.c_str());
  RunResult r;
  r.exit_code = WEXITSTATUS(status);
  auto slurp = [](const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

std::string slurp_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("validate on the shipped i.i.d. model exits zero") {
  RunResult r = run("validate --model " + models() + "/iid_coin.json --no-header");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("\"pass\":true") != std::string::npos);
}

TEST_CASE("malformed JSON exits 3 and reports the position") {
  std::ofstream bad("bad_model.json");
  bad << "{ \"schema\": 1, \"kind\": ";
  bad.close();
  RunResult r = run("validate --model bad_model.json");
  CHECK(r.exit_code == 3);
  CHECK(r.err.find("line") != std::string::npos);
  CHECK(r.err.find("column") != std::string::npos);
}

TEST_CASE("missing model file exits 3") {
  RunResult r = run("validate --model does_not_exist.json");
  CHECK(r.exit_code == 3);
}

TEST_CASE("identical config and seed give byte-identical CSV") {
  std::string base = "sample --model " + models() +
                     "/markov_chain.json --paths 64 --seed 7 --no-header --out ";
  RunResult a = run(base + "sample_a.csv");
  RunResult b = run(base + "sample_b.csv");
  CHECK(a.exit_code == 0);
  CHECK(b.exit_code == 0);
  CHECK(slurp_file("sample_a.csv") == slurp_file("sample_b.csv"));
  RunResult c = run("sample --model " + models() +
                    "/markov_chain.json --paths 64 --seed 8 --no-header --out sample_c.csv");
  CHECK(c.exit_code == 0);
  CHECK(slurp_file("sample_a.csv") != slurp_file("sample_c.csv"));
}

TEST_CASE("joint enumeration on the Markov model sums to one") {
  RunResult r = run("joint --model " + models() + "/markov_chain.json --no-header --out joint.csv");
  CHECK(r.exit_code == 0);
}

TEST_CASE("marginal routes agree on the shipped model") {
  RunResult r = run("marginal --model " + models() + "/markov_chain.json --no-header --out m.csv");
  CHECK(r.exit_code == 0);
}

TEST_CASE("charfn passes on the shipped two-level model with a small budget") {
  RunResult r = run("charfn --model " + models() +
                    "/diffusive_d2.json --paths 4000 --dt 2e-3 --t 0.5 --seed 11 --no-header "
                    "--out charfn.csv");
  CHECK(r.exit_code == 0);
}

TEST_CASE("market-solve recovers the shipped case-1 closure") {
  RunResult r = run("market-solve --model " + models() + "/market_case1.json");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("\"pass\":true") != std::string::npos);
}

TEST_CASE("ising smoke run with enumeration check") {
  RunResult r = run("ising --N 6 --beta 0.5 --steps 200000 --burn-in 20000 --seed 5 --no-header "
                    "--out ising.csv");
  CHECK(r.exit_code == 0);
}

TEST_CASE("unknown subcommand fails argument parsing") {
  RunResult r = run("frobnicate");
  CHECK(r.exit_code != 0);
}
