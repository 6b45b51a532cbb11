#include <filesystem>
#include <fstream>
#include <sstream>

#include "brwlab/run.hpp"
#include "doctest.h"

using namespace brw;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("brwlab_test_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig make(const std::string& command, const std::string& scenario, const fs::path& out) {
  RunConfig c;
  apply_setting(c, "command", command);
  apply_setting(c, "scenario", scenario);
  apply_setting(c, "output", out.string());
  return c;
}

}  // namespace

TEST_CASE("settings parser") {
  auto kv = parse_settings("# comment\nscenario = zdrift\n\nparam.rho_bar=1.5  # inline\nseed=7\nseed = 9\n");
  REQUIRE(kv.size() == 4);
  CHECK(kv[0] == std::pair<std::string, std::string>{"scenario", "zdrift"});
  CHECK(kv[1] == std::pair<std::string, std::string>{"param.rho_bar", "1.5"});
  RunConfig c;
  for (auto& [k, v] : kv) apply_setting(c, k, v);
  CHECK(c.seed == 9);
  CHECK(c.params.at("rho_bar") == "1.5");

  apply_setting(c, "caps", "8,1,inf,2");
  apply_setting(c, "command", "sweep");
  finalize_config(c);
  CHECK(c.sweep);
  CHECK(c.caps == std::vector<Count>{1, 2, 8, kUnboundedCap});

  CHECK_THROWS_AS(apply_setting(c, "nonsense", "1"), ValidationError);
  CHECK_THROWS_AS(apply_setting(c, "replicas", "many"), ValidationError);
  CHECK_THROWS_AS(parse_settings("no equals sign here"), ValidationError);

  RunConfig bad;
  apply_setting(bad, "command", "sweep");
  CHECK_THROWS_AS(finalize_config(bad), ValidationError);  // no caps
  RunConfig zero;
  apply_setting(zero, "command", "classify");
  apply_setting(zero, "replicas", "0");
  CHECK_THROWS_AS(finalize_config(zero), ValidationError);
}

TEST_CASE("classify digest") {
  auto out = scratch("classify");
  auto c = make("classify", "gw", out);
  apply_setting(c, "param", "mean=2");
  finalize_config(c);
  auto r = run(c);
  CHECK(r.exit_code == kExitOk);
  CHECK(r.digest.find("local=survives") != std::string::npos);
  CHECK(r.digest.find("global=survives") != std::string::npos);
  CHECK(r.digest.find("qbar=0.49999999") != std::string::npos);
  CHECK(fs::exists(out / "classify.csv"));
  CHECK(fs::exists(out / "manifest.txt"));
}

TEST_CASE("outputs are deterministic and carry the model hash") {
  auto a = scratch("det_a"), b = scratch("det_b");
  for (const auto& dir : {a, b}) {
    auto c = make("sweep", "zdrift", dir);
    apply_setting(c, "param.radius", "10");
    apply_setting(c, "caps", "1,2,4");
    apply_setting(c, "replicas", "100");
    apply_setting(c, "horizon", "30");
    apply_setting(c, "seed", "3");
    apply_setting(c, "threads", dir == a ? "1" : "4");
    apply_setting(c, "analyses", "classify,extinction,spectral,spatial,percolation");
    apply_setting(c, "radii", "1,2,3");
    finalize_config(c);
    auto r = run(c);
    REQUIRE(r.exit_code == kExitOk);
  }
  const std::string manifest = slurp(a / "manifest.txt");
  const auto pos = manifest.find("model_hash=");
  REQUIRE(pos != std::string::npos);
  const std::string hash_line = "# " + manifest.substr(pos, manifest.find('\n', pos) - pos);
  std::size_t csvs = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    if (entry.path().extension() != ".csv") continue;
    ++csvs;
    const std::string body = slurp(entry.path());
    CHECK(body == slurp(b / entry.path().filename()));
    CHECK(body.rfind(hash_line + "\n", 0) == 0);
  }
  CHECK(csvs >= 8);
  CHECK(fs::exists(a / "sweep.csv"));
  CHECK(fs::exists(a / "percolation.csv"));
  CHECK(fs::exists(a / "spatial.csv"));
}

TEST_CASE("sweep frequencies are monotone in m") {
  auto out = scratch("sweep");
  auto c = make("sweep", "zdrift", out);
  apply_setting(c, "param.rho_bar", "1.5");
  apply_setting(c, "caps", "1,2,4,8,16");
  apply_setting(c, "replicas", "200");
  apply_setting(c, "horizon", "40");
  apply_setting(c, "pop_cap", "100000");
  finalize_config(c);
  auto r = run(c);
  CHECK((r.exit_code == kExitOk || r.exit_code == kExitOverflow));
  CHECK(r.digest.find("monotone in m") != std::string::npos);
}

TEST_CASE("exit codes") {
  RunConfig unknown;
  unknown.command = "dance";
  unknown.output = scratch("unknown").string();
  CHECK(run(unknown).exit_code == kExitInvalidConfig);

  auto bad = make("classify", "nope", scratch("bad_scenario"));
  CHECK(run(bad).exit_code == kExitScenarioError);

  auto bad_param = make("classify", "gw", scratch("bad_param"));
  apply_setting(bad_param, "param.colour", "blue");
  CHECK(run(bad_param).exit_code == kExitScenarioError);

  auto overflow = make("sweep", "gw", scratch("overflow"));
  apply_setting(overflow, "param.rho", "2:1");
  apply_setting(overflow, "caps", "1");
  apply_setting(overflow, "replicas", "3");
  apply_setting(overflow, "horizon", "40");
  apply_setting(overflow, "pop_cap", "1000");
  auto r = run(overflow);
  CHECK(r.exit_code == kExitOverflow);
  CHECK(fs::exists(fs::path(overflow.output) / "sweep.csv"));
}

TEST_CASE("scenario listing") {
  const std::string text = list_scenarios();
  std::size_t last = 0;
  for (const char* name : {"gw", "line_noext", "line_noext_irreducible", "line_ex45", "zd_translation",
                           "tree_counterpart", "zdrift"}) {
    const auto pos = text.find(std::string(name) + "\n");
    REQUIRE(pos != std::string::npos);
    CHECK(pos >= last);
    last = pos;
  }
  CHECK(text.find("anchor:") != std::string::npos);
  CHECK(text == list_scenarios());
  CHECK(known_commands().size() == 7);
}
