#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "minsup/cli/config.hpp"
#include "minsup/cli/runner.hpp"
#include "minsup/cli/scenarios.hpp"

using namespace minsup;
using namespace minsup::cli;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("minsup-test-" + tag + "-" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("scenario defaults") {
  const RunConfig c = parse_config(R"({"scenario": "entropic-1d", "seed": 7})");
  RunConfig expected = find_scenario("entropic-1d").defaults;
  expected.scenario = "entropic-1d";
  expected.seed = 7;
  CHECK(c == expected);
  CHECK(c.generator.name == "entropic");
  CHECK(c.terminal.name == "tanh");

  const RunConfig o = parse_config(R"({"scenario": "entropic-1d", "seed": 7, "grid": {"dx": 0.05}})");
  CHECK(o.grid.dx == 0.05);
  CHECK(o.grid.x_lo == expected.grid.x_lo);
  CHECK_THROWS_WITH(find_scenario("entropic"), doctest::Contains("entropic-1d"));
}

TEST_CASE("configuration errors") {
  CHECK(error_of(R"({"scenario": "entropic-1d"})") == "seed required");
  CHECK(error_of(R"({"seed": 1})") == "scenario required");
  CHECK(error_of(R"({"scenario": "entropic-1d", "seed": -1})").find("non-negative") != std::string::npos);
  CHECK(error_of("{not json").find("invalid JSON") != std::string::npos);

  const std::string typo = error_of(R"({"scenario": "entropic-1d", "seed": 1, "generator": {"name": "entropc"}})");
  for (const char* name : {"entropc", "zero", "abs-z", "entropic", "separable", "weighted-abs-z"})
    CHECK(typo.find(name) != std::string::npos);
  CHECK(error_of(R"({"scenario": "entropic-1d", "seed": 1, "gird": {}})").find("unknown key 'gird'") !=
        std::string::npos);
  CHECK(error_of(R"({"scenario": "entropic-1d", "seed": 1, "checks": ["slove"]})").find("valid checks") !=
        std::string::npos);

  CHECK(error_of(R"({"scenario": "entropic-1d", "seed": 1, "grid": {"dx": -0.1}})").find("out of range") !=
        std::string::npos);
  CHECK(error_of(R"({"scenario": "entropic-1d", "seed": 1, "ladder": {"n_max": 0}})").find("out of range") !=
        std::string::npos);
  CHECK(error_of(R"({"scenario": "entropic-1d", "seed": 1, "grid": {"x_lo": 2, "x_hi": 1}})").find("x_hi") !=
        std::string::npos);
  CHECK_FALSE(error_of(R"({"scenario": "entropic-1d", "seed": 1, "mc": {"n_paths": 1.5}})").empty());
}

TEST_CASE("sha256 known answers") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("atomic writes replace the target and leave no temporaries") {
  const fs::path dir = fresh_dir("atomic");
  fs::create_directories(dir);
  write_atomic(dir / "a.txt", "first");
  write_atomic(dir / "a.txt", "second");
  CHECK(slurp(dir / "a.txt") == "second");
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    ++files;
    CHECK(e.path().extension() != ".tmp");
  }
  CHECK(files == 1);
  fs::remove_all(dir);
}

TEST_CASE("exit codes") {
  auto outcome = [](analysis::Verdict v) {
    CheckOutcome o;
    analysis::CheckReport r;
    r.verdict = v;
    o.reports.push_back(r);
    return o;
  };
  using analysis::Verdict;
  CHECK(exit_code_for({outcome(Verdict::pass), outcome(Verdict::pass)}) == 0);
  CHECK(exit_code_for({outcome(Verdict::pass), outcome(Verdict::inconclusive)}) == 2);
  CHECK(exit_code_for({outcome(Verdict::inconclusive), outcome(Verdict::fail)}) == 1);
  CheckOutcome broken = outcome(Verdict::pass);
  broken.error = "boom";
  CHECK(exit_code_for({broken}) == 1);
}

TEST_CASE("runs report their verdicts through the exit code") {
  RunConfig pass = parse_config(R"({"scenario": "huber-ladder", "seed": 3, "checks": ["ladder"]})");
  const fs::path d1 = fresh_dir("pass");
  const RunManifest m = run(pass, d1);
  CHECK(m.exit_code == 0);
  CHECK(fs::exists(d1 / "config.json"));
  CHECK(fs::exists(d1 / "summary.csv"));
  CHECK(fs::exists(d1 / "run_manifest.json"));
  CHECK(parse_config(slurp(d1 / "config.json")) == pass);

  RunConfig inconclusive = parse_config(R"({"scenario": "rec-inconclusive", "seed": 3})");
  const fs::path d2 = fresh_dir("inconclusive");
  CHECK(run(inconclusive, d2).exit_code == 2);

  // A check whose inputs are rejected is reported as an error, exit 1.
  RunConfig broken = parse_config(R"({"scenario": "g-zero-linear", "seed": 3, "checks": ["solve"],
                                      "ladder": {"n_first": 1, "n_max": 2}, "grid": {"time_steps": 1}})");
  const CheckOutcome o = run_check(broken, "solve");
  CHECK_FALSE(o.error.empty());
  const fs::path d3 = fresh_dir("broken");
  CHECK(run(broken, d3).exit_code == 1);
  for (const auto& d : {d1, d2, d3}) fs::remove_all(d);
}

TEST_CASE("identical configs give identical files") {
  RunConfig c = parse_config(R"({"scenario": "huber-ladder", "seed": 11})");
  const fs::path a = fresh_dir("det-a"), b = fresh_dir("det-b");
  c.workers = 1;
  const RunManifest ma = run(c, a);
  const RunManifest mb = run(c, b);
  REQUIRE(ma.files.size() == mb.files.size());
  CHECK(ma.files.size() > 2);
  for (std::size_t k = 0; k < ma.files.size(); ++k) {
    CHECK(ma.files[k].path == mb.files[k].path);
    CHECK(ma.files[k].sha256 == mb.files[k].sha256);
    CHECK(sha256_hex(slurp(a / ma.files[k].path)) == ma.files[k].sha256);
  }
  CHECK(ma.config_hash == config_hash(c));
  fs::remove_all(a);
  fs::remove_all(b);
}

// Properties.

TEST_CASE("property: serialization round-trips bit-exactly") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const Scenario& s : scenario_registry()) {
    CAPTURE(s.name);
    for (int trial = 0; trial < 10; ++trial) {
      RunConfig c = s.defaults;
      c.scenario = s.name;
      c.seed = rng();
      c.grid.dx = 0.01 + 0.1 * u(rng);
      c.grid.cfl_target = 0.1 + 0.9 * u(rng) * (1.0 - 1e-9);
      c.mc.x0 = 2.0 * u(rng) - 1.0;
      c.stability.scale = u(rng);
      const RunConfig back = parse_config(serialize_config(c));
      CHECK(back == c);
      CHECK(serialize_config(back) == serialize_config(c));
      CHECK(config_hash(back) == config_hash(c));
    }
  }
}
