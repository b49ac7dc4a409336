#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "mlgibbs/commands.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("mlgibbs_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

Result cli(const std::string& args, const std::string& env = "") {
  const fs::path out = scratch() / "stdout.txt", err = scratch() / "stderr.txt";
  const std::string cmd = env + " " + MLGIBBS_CLI_PATH + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string lines_after_header(const std::string& csv) { return csv.substr(csv.find('\n') + 1); }

}  // namespace

TEST_CASE("calibrate prints the penalized plan") {
  const auto cfg = write_config("q.json", R"({"potential":{"name":"quadratic","dim":1},"sigma":1,"epsilon":0.1,
                                              "method":"penalized"})");
  const Result r = cli("calibrate --config " + cfg.string());
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["alpha"].get<double>() == doctest::Approx(0.23094010767585033));
  CHECK(j["J"] == 11);
  CHECK(j["gamma"].size() == 12);
  CHECK(j["T"].size() == 12);
  CHECK(j["statement_mode"] == false);
  CHECK(j["m4_source"] == "closed_form");
  CHECK(j["predicted_cost"].get<double>() > 0);
}

TEST_CASE("calibrate single_level has no correction levels") {
  const auto cfg = write_config("s.json", R"({"potential":{"name":"power","dim":1,"p":0.75},"sigma":1,
                                              "epsilon":0.2,"method":"single_level"})");
  const Result r = cli("calibrate --config " + cfg.string());
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["J"] == 0);
}

TEST_CASE("config errors exit 2 with the field name") {
  const auto weak = write_config("w.json", R"({"potential":{"name":"quadratic","dim":1},"sigma":1,"epsilon":0.1,
                                              "method":"weak_i"})");
  Result r = cli("calibrate --config " + weak.string());
  CHECK(r.code == 2);
  CHECK(r.err.find("c_lower") != std::string::npos);

  const auto typo = write_config("t.json", R"({"potential":{"name":"quadratic","dim":1},"sigma":1,"epsilon":0.1,
                                              "method":"penalized","replicats":3})");
  r = cli("calibrate --config " + typo.string());
  CHECK(r.code == 2);
  CHECK(r.err.find("replicats") != std::string::npos);

  const auto custom = write_config("f.json", R"({"potential":{"name":"quadratic","dim":1},"sigma":1,"epsilon":0.1,
                                                "method":"penalized","f":"x^3"})");
  CHECK(cli("calibrate --config " + custom.string()).code == 2);
  CHECK(cli("calibrate --config " + (scratch() / "missing.json").string()).code == 2);
  CHECK(cli("calibrate").code == 2);
}

TEST_CASE("infeasible calibration exits 3") {
  const auto cfg = write_config("inf.json", R"({"potential":{"name":"quadratic","dim":1,"scale":0.01,
                                                "penalty_alpha":0.01},"sigma":1,"epsilon":0.2,"method":"penalized"})");
  CHECK(cli("calibrate --config " + cfg.string()).code == 3);
}

TEST_CASE("oracle failure exits 5") {
  const auto cfg = write_config("o.json", R"({"potential":{"name":"power","dim":1,"p":0.75},"sigma":1e6,
                                              "epsilon":0.2,"method":"single_level","replicates":2})");
  CHECK(cli("run --config " + cfg.string()).code == 5);
}

TEST_CASE("run emits the documented CSV and is reproducible") {
  const auto cfg = write_config("run.json", R"({"potential":{"name":"quadratic","dim":1},"sigma":1,"epsilon":0.4,
                                                "method":"penalized","f":"coord:0","replicates":20,"seed":7})");
  const fs::path out = scratch() / "run.csv";
  const Result a = cli("run --config " + cfg.string() + " --out " + out.string());
  const Result b = cli("run --config " + cfg.string() + " --threads 2");
  REQUIRE(a.code == 0);
  CHECK(a.out.rfind(mlgibbs::csv_header() + "\n", 0) == 0);
  CHECK(a.out == b.out);
  CHECK(slurp(out) == a.out);
  CHECK(a.out.find("penalized,quadratic,1,1,0.4,") != std::string::npos);

  const Result seeded = cli("run --config " + cfg.string(), "MLGIBBS_SEED=8");
  REQUIRE(seeded.code == 0);
  CHECK(seeded.out != a.out);
  CHECK(seeded.out.find(",20,8,") != std::string::npos);

  CHECK(cli("run --config " + cfg.string() + " --assert-eps 1e-9").code == 4);
  CHECK(cli("run --config " + cfg.string() + " --assert-eps 10").code == 0);
}

TEST_CASE("constant observable gives a zero-variance row") {
  const auto cfg = write_config("c.json", R"({"potential":{"name":"quadratic","dim":2},"sigma":1,"epsilon":0.4,
                                              "method":"single_level","f":"const:2","replicates":3,"seed":1})");
  const Result r = cli("run --config " + cfg.string());
  REQUIRE(r.code == 0);
  CHECK(r.out.find(",2,0,0,0,") != std::string::npos);  // mean, bias, variance, rmse
}

TEST_CASE("sweep") {
  const auto cfg = write_config("sw.json", R"({"potential":{"name":"power","dim":1,"p":0.75},"sigma":1,
                                               "epsilon":0.4,"method":"weak_ii","replicates":2,"seed":3})");
  const Result r = cli("sweep --config " + cfg.string() + " --epsilons 0.4,0.4,0.4");
  REQUIRE(r.code == 0);
  std::istringstream rows(lines_after_header(r.out));
  std::string r1, r2, r3, slope;
  std::getline(rows, r1);
  std::getline(rows, r2);
  std::getline(rows, r3);
  std::getline(rows, slope);
  CHECK(r1 == r2);
  CHECK(r2 == r3);
  CHECK(slope.rfind("# cost_slope,", 0) == 0);

  CHECK(cli("sweep --config " + cfg.string() + " --epsilons 0.4,0.2").code == 2);
}

TEST_CASE("diag") {
  CHECK(cli("diag --suite foo").code == 2);
  const Result r = cli("diag --suite penalization_bias");
  CHECK(r.code == 0);
  CHECK(r.out.find("PASS") != std::string::npos);
}
