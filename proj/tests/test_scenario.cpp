#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qdyn/scenario.hpp"

using namespace qdyn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kFixtures = QDYN_FIXTURE_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("qdyn-test-" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<ScenarioError> errors_of(const json& doc) {
  try {
    parse_scenario(doc);
  } catch (const ScenarioInvalid& e) {
    return e.errors();
  }
  return {};
}

bool has_path(const std::vector<ScenarioError>& errors, const std::string& path) {
  for (const auto& e : errors)
    if (e.path == path) return true;
  return false;
}

json small_wigner() {
  return json::parse(R"({
    "kind": "wigner", "name": "w", "seed": 3, "observables": ["X[0]", "n[0]"],
    "model": {"lattice": {"dims": [1], "box_length": [1.0], "chi": [[0.01]]}, "initial": {"amplitude": 5.0}},
    "method": {"trajectories": 64, "dt": 0.001, "t_max": 0.02, "samples": 4, "groups": 8}
  })");
}

std::vector<fs::path> fixtures() {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(kFixtures))
    if (e.path().extension() == ".json") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(ScenarioParse, MinimalVariationalUsesDefaults) {
  const auto s = parse_scenario(R"({"kind": "variational", "model": {"target": 1.5}})");
  ASSERT_EQ(s.kind, ScenarioKind::variational);
  const auto& v = std::get<VariationalScenario>(s.body);
  EXPECT_EQ(v.lambda, 1e-4);
  EXPECT_EQ(v.iterations, 4);
  EXPECT_EQ(v.components, 16);
  EXPECT_NEAR(v.dt, 2 * kPi / 2000, 1e-15);
  EXPECT_NEAR(v.t_max, 2 * kPi, 1e-15);
  EXPECT_EQ(s.name, "scenario");
  EXPECT_EQ(s.seed, 1u);
}

TEST(ScenarioParse, NegativeTrajectoriesGiveOneError) {
  auto doc = small_wigner();
  doc["method"]["trajectories"] = -10;
  const auto errors = errors_of(doc);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_EQ(errors[0].path, "/method/trajectories");
}

TEST(ScenarioParse, ReportsEveryErrorWithItsPath) {
  auto doc = small_wigner();
  doc["model"]["lattice"]["dimz"] = 3;
  doc["method"]["dt"] = -1.0;
  doc["method"]["reduction"] = "sloppy";
  doc["model"]["initial"].erase("amplitude");
  doc["extra"] = true;
  const auto errors = errors_of(doc);
  EXPECT_GE(errors.size(), 5u);
  for (const char* p : {"/model/lattice/dimz", "/method/dt", "/method/reduction", "/model/initial/amplitude", "/extra"})
    EXPECT_TRUE(has_path(errors, p)) << p;
}

TEST(ScenarioParse, RejectsMalformedDocuments) {
  EXPECT_THROW(parse_scenario("{not json"), ScenarioInvalid);
  EXPECT_THROW(parse_scenario("[1, 2]"), ScenarioInvalid);
  EXPECT_TRUE(has_path(errors_of(json{{"name", "x"}}), "/kind"));
  EXPECT_TRUE(has_path(errors_of(json{{"kind", "teleport"}}), "/kind"));
  EXPECT_TRUE(has_path(errors_of(json{{"kind", "dimension-count"}, {"model", {{"particles", 2}}}}), "/model/modes"));
  EXPECT_TRUE(has_path(errors_of(json{{"kind", "dimension-count"}, {"model", {{"particles", "two"}, {"modes", 2}}}}),
                       "/model/particles"));
  // observables only apply to ensemble kinds
  EXPECT_TRUE(has_path(
      errors_of(json{{"kind", "dimension-count"}, {"observables", {"X[0]"}}, {"model", {{"particles", 2}, {"modes", 2}}}}),
      "/observables"));
  EXPECT_TRUE(has_path(errors_of(json{{"kind", "dimension-count"}, {"name", "a/b"}, {"model", {{"particles", 1}, {"modes", 1}}}}),
                       "/name"));
}

TEST(ScenarioParse, EngineLevelChecksSurfaceAsValidationErrors) {
  auto doc = small_wigner();
  doc["observables"] = {"X[7]"};
  EXPECT_THROW(parse_scenario(doc), ScenarioInvalid);
  doc = small_wigner();
  doc["model"]["initial"]["amplitude"] = {1.0, 2.0, 3.0};  // one cell, three amplitudes
  EXPECT_THROW(parse_scenario(doc), ScenarioInvalid);
  doc = small_wigner();
  doc["method"]["t_max"] = 0.0205;  // not on the dt grid
  EXPECT_TRUE(has_path(errors_of(doc), "/method/t_max"));
}

TEST(ScenarioParse, ReverseNeedsEvenSamplesAndReversalTime) {
  auto doc = json::parse(slurp(kFixtures / "plusp-reverse-kerr.json"));
  doc["method"]["samples"] = 5;
  EXPECT_TRUE(has_path(errors_of(doc), "/method/samples"));
  doc["method"]["samples"] = 20;
  doc["method"].erase("reversal_time");
  EXPECT_TRUE(has_path(errors_of(doc), "/method/reversal_time"));
}

TEST(ScenarioParse, ComplexValuesAcceptPairs) {
  const auto s = parse_scenario(R"({"kind": "variational", "model": {"omega": [[1.0, [0.5, 0.5]], [[0.5, -0.5], 2.0]],
                                    "chi": [[0, 0], [0, 0]], "target": [[1.0, 2.0], -1.0]}})");
  const auto& v = std::get<VariationalScenario>(s.body);
  EXPECT_EQ(v.target[0], cplx(1.0, 2.0));
  EXPECT_EQ(v.omega(0, 1), cplx(0.5, 0.5));
  EXPECT_THROW(parse_scenario(R"({"kind": "variational", "model": {"omega": [[1.0, [0.5, 0.5]], [[0.5, 0.5], 2.0]],
                                  "chi": [[0, 0], [0, 0]], "target": [1.0, 1.0]}})"),
               ScenarioInvalid);  // not Hermitian
}

TEST(ScenarioParse, RoundTripIsIdentity) {
  std::vector<json> docs{small_wigner(), json::parse(R"({"kind": "variational", "model": {"target": 1.5}})")};
  for (const auto& f : fixtures()) docs.push_back(json::parse(slurp(f)));
  for (const auto& doc : docs) {
    const auto s = parse_scenario(doc);
    const json once = serialize(s);
    const auto again = parse_scenario(once);
    EXPECT_EQ(serialize(again), once) << once.dump();
    EXPECT_EQ(parameter_hash(again), parameter_hash(s));
    EXPECT_EQ(again.kind, s.kind);
  }
}

TEST(ScenarioParse, HashTracksParameters) {
  auto a = parse_scenario(small_wigner());
  auto doc = small_wigner();
  doc["method"]["dt"] = 0.0005;
  const auto b = parse_scenario(doc);
  EXPECT_NE(parameter_hash(a), parameter_hash(b));
  EXPECT_EQ(parameter_hash(a).size(), 16u);
  doc = small_wigner();
  doc["description"] = "other words";
  EXPECT_NE(parameter_hash(a), parameter_hash(parse_scenario(doc)));
}

TEST(ScenarioFixtures, EveryFixtureValidates) {
  const auto files = fixtures();
  ASSERT_GE(files.size(), 8u);
  for (const auto& f : files) {
    EXPECT_NO_THROW(load_scenario(f)) << f;
    const auto s = load_scenario(f);
    EXPECT_TRUE(s.metadata.contains("expect")) << f << " has no tolerances";
    EXPECT_EQ(s.name, f.stem().string());
  }
}

TEST(ScenarioRun, DimensionCountPrintsThree) {
  const auto dir = scratch("dim");
  RunOptions o;
  o.out_dir = dir;
  const auto r = run_scenario(load_scenario(kFixtures / "dimension-count-2x2.json"), o);
  EXPECT_EQ(r.exit_code, kExitOk);
  EXPECT_EQ(r.message, "3");
  EXPECT_TRUE(fs::exists(dir / "dimension-count-2x2.json"));
  EXPECT_TRUE(fs::exists(dir / "dimension-count-2x2.manifest.json"));
}

TEST(ScenarioRun, SameSeedGivesByteIdenticalCsv) {
  const auto s = parse_scenario(small_wigner());
  const auto a = scratch("a"), b = scratch("b"), c = scratch("c");
  RunOptions o;
  o.deterministic = true;
  o.out_dir = a;
  run_scenario(s, o);
  o.out_dir = b;
  o.threads = 3;  // deterministic reduction does not depend on the worker count
  run_scenario(s, o);
  const auto csv = slurp(a / "w.csv");
  ASSERT_FALSE(csv.empty());
  EXPECT_EQ(csv, slurp(b / "w.csv"));
  EXPECT_EQ(slurp(a / "w.json"), slurp(b / "w.json"));

  o.out_dir = c;
  o.seed = 4;
  run_scenario(s, o);
  EXPECT_NE(slurp(c / "w.csv"), csv);
}

TEST(ScenarioRun, ManifestIsEnoughToRerun) {
  auto doc = small_wigner();
  RunOptions o;
  o.out_dir = scratch("m1");
  o.seed = 99;
  const auto first = run_scenario(parse_scenario(doc), o);
  const json manifest = json::parse(slurp(o.out_dir / "w.manifest.json"));
  for (const char* key : {"tool", "version", "kind", "seed", "parameter_hash", "diverged", "wall_time_s", "exit_code",
                          "outputs", "scenario", "compiler", "eigen"})
    EXPECT_TRUE(manifest.contains(key)) << key;
  EXPECT_EQ(manifest["seed"], 99);
  EXPECT_EQ(manifest["scenario"]["seed"], 99);  // overrides are folded into the recorded scenario
  const auto rerun_scenario = parse_scenario(manifest["scenario"]);
  EXPECT_EQ(parameter_hash(rerun_scenario), manifest["parameter_hash"].get<std::string>());
  RunOptions again;
  again.out_dir = scratch("m2");
  run_scenario(rerun_scenario, again);
  EXPECT_EQ(slurp(again.out_dir / "w.csv"), slurp(o.out_dir / "w.csv"));
  EXPECT_EQ(first.files.size(), 3u);
}

TEST(ScenarioRun, CsvHasHeaderAndFullPrecision) {
  RunOptions o;
  o.out_dir = scratch("csv");
  run_scenario(parse_scenario(small_wigner()), o);
  std::ifstream in(o.out_dir / "w.csv");
  std::string header, row;
  std::getline(in, header);
  EXPECT_EQ(header, "t,X[0]_re,X[0]_im,X[0]_err_re,X[0]_err_im,n[0]_re,n[0]_im,n[0]_err_re,n[0]_err_im,diverged");
  int rows = 0;
  while (std::getline(in, row)) {
    ++rows;
    std::stringstream ss(row);
    std::string cell;
    std::getline(ss, cell, ',');
    std::getline(ss, cell, ',');
    const double x = std::stod(cell);
    EXPECT_GT(x, 0.0);
    // %.17g round-trips a double exactly
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    EXPECT_EQ(std::string(buf), cell);
  }
  EXPECT_EQ(rows, 5);
}

TEST(ScenarioRun, SamplingCeilingIsInconclusive) {
  auto doc = json::parse(R"({
    "kind": "plusp", "name": "p", "observables": ["X[0]"],
    "model": {"lattice": {"dims": [1], "box_length": [1.0], "chi": [[0.01]]},
              "initial": {"family": "coherent", "amplitude": 10.0}},
    "method": {"trajectories": 20, "dt": 0.001, "t_max": 0.01, "samples": 2, "divergence_ceiling": 5.0}
  })");
  RunOptions o;
  o.out_dir = scratch("inc");
  const auto r = run_scenario(parse_scenario(doc), o);
  EXPECT_EQ(r.exit_code, kExitInconclusive);
  EXPECT_TRUE(r.summary["unreliable"].get<bool>());
}

TEST(ScenarioRun, EngineFailuresPropagate) {
  // a single Tikhonov midpoint iteration with no halvings cannot hold the residual down at this step
  const auto s = parse_scenario(R"({"kind": "variational", "name": "v",
      "model": {"chi": 1.0, "target": 3.0, "components": 4, "radius": 0.5},
      "method": {"dt": 0.5, "t_max": 2.0, "iterations": 1, "max_halvings": 0}})");
  RunOptions o;
  o.out_dir = scratch("fail");
  EXPECT_THROW(run_scenario(s, o), SingularMatrix);
}

TEST(ScenarioRun, EntropyFixtureMatchesItsMetadata) {
  for (const char* name : {"entropy-thermal.json", "entropy-fermion-mixture.json"}) {
    const auto s = load_scenario(kFixtures / name);
    RunOptions o;
    o.out_dir = scratch("ent");
    const auto r = run_scenario(s, o);
    const auto& expect = s.metadata["expect"];
    EXPECT_NEAR(r.summary["s2"].get<double>(), expect["s2"].get<double>(), expect["absolute_tolerance"].get<double>())
        << name;
  }
}

// ---- the command-line front end ----

namespace {

int cli(const std::string& args, const fs::path& out) {
  const std::string cmd = "QDYN_OUT_DIR='" + out.string() + "' '" QDYN_CLI "' " + args + " > '" +
                          (out / "stdout.txt").string() + "' 2> '" + (out / "stderr.txt").string() + "'";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
  const auto out = scratch("cli");
  EXPECT_EQ(cli("run '" + (kFixtures / "dimension-count-2x2.json").string() + "'", out), 0);
  EXPECT_EQ(slurp(out / "stdout.txt"), "3\n");
  EXPECT_TRUE(fs::exists(out / "dimension-count-2x2.manifest.json"));  // default directory from the environment

  EXPECT_EQ(cli("validate '" + (kFixtures / "plusp-reverse-kerr.json").string() + "'", out), 0);

  std::ofstream(out / "bad.json") << R"({"kind": "wigner", "method": {"trajectories": -1}})";
  EXPECT_EQ(cli("validate '" + (out / "bad.json").string() + "'", out), 2);
  EXPECT_NE(slurp(out / "stderr.txt").find("/model"), std::string::npos);
  EXPECT_EQ(cli("run '" + (out / "bad.json").string() + "'", out), 2);
  EXPECT_EQ(cli("run '" + (out / "missing.json").string() + "'", out), 2);
  EXPECT_EQ(cli("frobnicate", out), 2);

  std::ofstream(out / "fail.json") << R"({"kind": "variational", "name": "v",
      "model": {"chi": 1.0, "target": 3.0, "components": 4, "radius": 0.5},
      "method": {"dt": 0.5, "t_max": 2.0, "iterations": 1, "max_halvings": 0}})";
  EXPECT_EQ(cli("run '" + (out / "fail.json").string() + "'", out), 3);

  std::ofstream(out / "inc.json") << R"({
    "kind": "plusp", "name": "p", "observables": ["X[0]"],
    "model": {"lattice": {"dims": [1], "box_length": [1.0], "chi": [[0.01]]},
              "initial": {"family": "coherent", "amplitude": 10.0}},
    "method": {"trajectories": 20, "dt": 0.001, "t_max": 0.01, "samples": 2, "divergence_ceiling": 5.0}})";
  EXPECT_EQ(cli("run '" + (out / "inc.json").string() + "' --out '" + (out / "sub").string() + "'", out), 4);
  EXPECT_TRUE(fs::exists(out / "sub" / "p.csv"));
}

TEST(Cli, SeedOverrideAndListing) {
  const auto out = scratch("cli2");
  std::ofstream(out / "w.json") << small_wigner().dump();
  ASSERT_EQ(cli("run '" + (out / "w.json").string() + "' --seed 17 --deterministic --threads 2", out), 0);
  EXPECT_EQ(json::parse(slurp(out / "w.manifest.json"))["seed"], 17);
  ASSERT_EQ(cli("list-scenarios", out), 0);
  const auto listing = slurp(out / "stdout.txt");
  for (const char* kind : {"exact-doublewell", "wigner", "plusp", "plusp-reverse", "entropy", "variational",
                           "dimension-count", "plusp-reverse-kerr.json"})
    EXPECT_NE(listing.find(kind), std::string::npos) << kind;
}
