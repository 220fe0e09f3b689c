#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using smallball::cli::run;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const char* env = std::getenv("SMALLBALL_TEST_TMP");
  const fs::path root = env ? fs::path(env) : fs::temp_directory_path() / "smallball_cli_test";
  const fs::path dir = root / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(call({}).code == smallball::cli::kExitUsage);
  CHECK(call({"frobnicate"}).code == smallball::cli::kExitUsage);
  const auto dir = scratch("empty");
  std::ofstream(dir / "empty.cfg").close();
  CHECK(call({"--config", (dir / "empty.cfg").string()}).code == smallball::cli::kExitUsage);
  CHECK(call({"simulate", "--process", "brownian", "-o", dir.string()}).code == smallball::cli::kExitUsage);
  CHECK(call({"simulate", "--exec", "gpu"}).code == smallball::cli::kExitUsage);
  CHECK(call({"--version"}).code == smallball::cli::kExitPass);
}

TEST_CASE("oracle a3 prints the limit") {
  const auto dir = scratch("oracle");
  const auto r = call({"oracle", "--lemma", "a3", "--hurst", "0.75", "-o", dir.string()});
  CHECK(r.code == smallball::cli::kExitPass);
  CHECK(r.out.rfind("1.7724", 0) == 0);
  CHECK(fs::exists(dir / "oracle.csv"));
  CHECK(fs::exists(dir / "oracle.summary.json"));
  CHECK(fs::exists(dir / "oracle.manifest"));
}

TEST_CASE("assertion failures exit with 2") {
  const auto dir = scratch("assert");
  const auto r = call({"check-a1", "--function", "exp:1,1", "--k", "2", "--eta-star", "0.5", "--lo", "-20", "--hi",
                       "0", "-o", dir.string()});
  CHECK(r.code == smallball::cli::kExitAssertion);
}

TEST_CASE("dry run validates without writing") {
  const auto dir = scratch("dry");
  const auto r = call({"diverge", "--process", "ou", "--dry-run", "-o", (dir / "out").string()});
  CHECK(r.code == smallball::cli::kExitPass);
  CHECK(r.out.rfind("plan: ", 0) == 0);
  CHECK(r.out.find("command=diverge\n") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out"));
  const auto bad = call({"diverge", "--process", "fou", "--process-hurst", "0.3", "--dry-run"});
  CHECK(bad.code == smallball::cli::kExitUsage);
  CHECK(bad.err.find("hurst") != std::string::npos);
}

TEST_CASE("inadmissible small-ball radius names the condition") {
  const auto dir = scratch("smallball");
  const auto r = call({"smallball", "--process", "bridge", "--delta", "0.25", "--etas", "0.01,0.3", "--replicates",
                       "1000", "-o", dir.string()});
  CHECK(r.code == smallball::cli::kExitPass);
  const std::string csv = slurp(dir / "smallball.csv");
  CHECK(csv.rfind("s,delta,eta,p_hat,half_width,bound,admissible", 0) == 0);
  const auto summary = nlohmann::json::parse(slurp(dir / "smallball.summary.json"));
  CHECK(summary.dump().find("K3") != std::string::npos);
}

TEST_CASE("manifest re-run reproduces the csv byte for byte") {
  const auto a = scratch("rerun_a");
  const auto b = scratch("rerun_b");
  REQUIRE(call({"simulate", "--process", "fou", "--process-hurst", "0.7", "--steps", "64", "--replicates", "3",
                "--seed", "17", "-o", a.string()})
              .code == 0);
  const auto r = call({"--config", (a / "simulate.manifest").string(), "-o", b.string()});
  REQUIRE(r.code == 0);
  CHECK(slurp(a / "simulate.csv") == slurp(b / "simulate.csv"));
  CHECK(slurp(a / "simulate.csv").find("\r") == std::string::npos);
}

TEST_CASE("explicit arguments override the config file") {
  const auto dir = scratch("override");
  std::ofstream(dir / "run.cfg") << "# flat key=value\ncommand=simulate\n\nprocess=ou\nsteps=8\nseed=3\n";
  REQUIRE(call({"--config", (dir / "run.cfg").string(), "--steps", "4", "-o", dir.string()}).code == 0);
  const std::string manifest = slurp(dir / "simulate.manifest");
  CHECK(manifest.find("steps=4\n") != std::string::npos);
  CHECK(manifest.find("seed=3\n") != std::string::npos);
  CHECK(manifest.find("process=ou\n") != std::string::npos);
}

TEST_CASE("SMALLBALL_SEED overrides the seed") {
  const auto dir = scratch("env");
  ::setenv("SMALLBALL_SEED", "1234", 1);
  const auto r = call({"simulate", "--steps", "8", "--seed", "5", "-o", dir.string()});
  ::unsetenv("SMALLBALL_SEED");
  REQUIRE(r.code == 0);
  CHECK(slurp(dir / "simulate.manifest").find("seed=1234\n") != std::string::npos);
  CHECK(nlohmann::json::parse(slurp(dir / "simulate.summary.json"))["seed"] == 1234);
}

TEST_CASE("diverge reports a slope near one for ou") {
  const auto dir = scratch("diverge");
  const auto r = call({"diverge", "--process", "ou", "--theta", "1", "--function", "poly:0,0,1", "--epsilon", "0.5",
                       "--seed", "7", "--replicates", "20", "--doublings", "7", "-o", dir.string()});
  CHECK(r.code == smallball::cli::kExitPass);
  const auto summary = nlohmann::json::parse(slurp(dir / "diverge.summary.json"));
  CHECK(summary["slope"].get<double>() == doctest::Approx(1.0).epsilon(0.1));
  CHECK(summary["pass"].get<bool>());
  CHECK(slurp(dir / "diverge.manifest").find("process-theta=1\n") != std::string::npos);
}

TEST_CASE("config reader") {
  const auto kv = smallball::cli::read_config("# c\n a = 1 \n\nb=x,y\n");
  REQUIRE(kv.size() == 2);
  CHECK(kv[0].first == "a");
  CHECK(kv[0].second == "1");
  CHECK(kv[1].second == "x,y");
  CHECK_THROWS(smallball::cli::read_config("novalue\n"));
}
