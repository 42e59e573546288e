#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "qdyn/scenario.hpp"

#ifndef QDYN_FIXTURE_DIR
#define QDYN_FIXTURE_DIR ""
#endif

namespace fs = std::filesystem;

namespace {

fs::path default_out_dir() {
  if (const char* env = std::getenv("QDYN_OUT_DIR"); env && *env) return env;
  return "qdyn-out";
}

void print_errors(const qdyn::ScenarioInvalid& e) {
  std::cerr << "validation failed:\n";
  for (const auto& err : e.errors()) std::cerr << "  " << (err.path.empty() ? "/" : err.path) << ": " << err.message << '\n';
}

int list_scenarios(const fs::path& fixtures) {
  std::cout << "scenario kinds:\n";
  for (auto kind : qdyn::all_scenario_kinds())
    std::cout << "  " << qdyn::to_string(kind) << "  " << qdyn::describe(kind) << '\n';
  if (fixtures.empty() || !fs::is_directory(fixtures)) return qdyn::kExitOk;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(fixtures))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::cout << "fixtures in " << fixtures.string() << ":\n";
  for (const auto& f : files) {
    try {
      const auto s = qdyn::load_scenario(f);
      std::cout << "  " << f.filename().string() << "  [" << qdyn::to_string(s.kind) << "]  " << s.description << '\n';
    } catch (const qdyn::ScenarioInvalid&) {
      std::cout << "  " << f.filename().string() << "  (invalid)\n";
    }
  }
  return qdyn::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qdyn: phase-space and variational quantum dynamics scenarios"};
  app.require_subcommand(1);

  std::string file;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out_dir = default_out_dir().string();
  bool deterministic = false;
  auto* run = app.add_subcommand("run", "run a scenario file");
  run->add_option("scenario", file, "scenario JSON file")->required();
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--out", out_dir, "output directory (default $QDYN_OUT_DIR or ./qdyn-out)");
  run->add_option("--threads", threads, "worker threads for ensemble runs")->check(CLI::PositiveNumber);
  run->add_flag("--deterministic", deterministic, "force the deterministic ensemble reduction");

  auto* validate = app.add_subcommand("validate", "check a scenario file and list every error");
  validate->add_option("scenario", file, "scenario JSON file")->required();

  std::string fixtures = QDYN_FIXTURE_DIR;
  auto* list = app.add_subcommand("list-scenarios", "list scenario kinds and shipped fixtures");
  list->add_option("--fixtures", fixtures, "fixture directory to list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return qdyn::kExitValidation;
  }

  if (*list) return list_scenarios(fixtures);

  qdyn::Scenario scenario;
  try {
    scenario = qdyn::load_scenario(file);
  } catch (const qdyn::ScenarioInvalid& e) {
    print_errors(e);
    return qdyn::kExitValidation;
  }
  if (*validate) {
    std::cout << file << ": valid " << qdyn::to_string(scenario.kind) << " scenario\n";
    return qdyn::kExitOk;
  }

  qdyn::RunOptions options;
  options.seed = seed;
  options.threads = threads;
  options.deterministic = deterministic;
  options.out_dir = out_dir;
  try {
    const auto report = qdyn::run_scenario(scenario, options);
    std::cout << report.message << '\n';
    for (const auto& f : report.files) std::cerr << "wrote " << f.string() << '\n';
    if (report.exit_code == qdyn::kExitInconclusive) std::cerr << "result inconclusive\n";
    return report.exit_code;
  } catch (const qdyn::ScenarioInvalid& e) {
    print_errors(e);
    return qdyn::kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return qdyn::kExitRuntime;
  }
}
