// Command-line front end for the timelessness toolkit.
//
//   tempo run <scenario> [--seed N] [--out DIR] [--format json|text]
//                        [--tol X] [--horizon T]
//   tempo list-examples
//
// <scenario> is either the name of a builtin example or a path to a scenario
// JSON file.  Exit code 0 means every check passed, 1 means at least one
// check failed or errored, 2 means the scenario itself was unusable.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tempo/errors.hpp"
#include "tempo/scenario.hpp"
#include "tempo/version.hpp"

namespace {

void print_text_report(const nlohmann::json& report) {
  const auto& scenario = report.at("scenario");
  std::printf("scenario %s (source %s, config %s)\n",
              scenario.at("name").get<std::string>().c_str(),
              scenario.at("source").get<std::string>().c_str(),
              scenario.at("config_hash").get<std::string>().c_str());
  std::printf("seed %llu\n",
              static_cast<unsigned long long>(report.at("seed").get<std::uint64_t>()));
  for (const auto& check : report.at("checks")) {
    const std::string verdict = check.at("verdict").get<std::string>();
    std::printf("  [%s] %s (%s, %.1f ms)\n",
                verdict == "pass" ? "PASS" : (verdict == "fail" ? "FAIL" : "ERR "),
                check.at("label").get<std::string>().c_str(),
                check.at("type").get<std::string>().c_str(),
                check.at("timing_ms").get<double>());
    if (check.contains("message")) {
      std::printf("         %s\n", check.at("message").get<std::string>().c_str());
    }
  }
  if (report.contains("trajectories")) {
    for (const auto& t : report.at("trajectories")) {
      std::printf("  trajectory %s (%zu samples%s)\n",
                  t.at("path").get<std::string>().c_str(),
                  static_cast<std::size_t>(t.at("samples").get<std::uint64_t>()),
                  t.at("written").get<bool>() ? ", written" : "");
    }
  }
  std::printf("verdict: %s\n", report.at("verdict").get<std::string>().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"timelessness toolkit: scenario checks for Hamiltonian clocks"};
  app.set_version_flag("--version", std::string(tempo::kVersion));
  app.require_subcommand(1);

  std::string scenario_ref;
  std::string out_dir;
  std::string format = "json";
  std::uint64_t seed = 0;
  bool seed_set = false;
  double tol = 0.0;
  bool tol_set = false;
  double horizon = 0.0;
  bool horizon_set = false;

  CLI::App* run = app.add_subcommand("run", "run a scenario file or builtin example");
  run->add_option("scenario", scenario_ref, "builtin name or path to scenario JSON")
      ->required();
  run->add_option("--seed", seed, "override the scenario seed")
      ->each([&](const std::string&) { seed_set = true; });
  run->add_option("--out", out_dir, "directory for report.json and trajectory CSVs");
  run->add_option("--format", format, "report format on stdout")
      ->check(CLI::IsMember({"json", "text"}));
  run->add_option("--tol", tol, "override every check's headline tolerance")
      ->each([&](const std::string&) { tol_set = true; });
  run->add_option("--horizon", horizon, "override the integration horizon")
      ->each([&](const std::string&) { horizon_set = true; });

  CLI::App* list =
      app.add_subcommand("list-examples", "list builtin examples with descriptions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (list->parsed()) {
    for (const auto& example : tempo::scenario::builtin_examples()) {
      std::printf("%-26s %s\n", example.name.c_str(), example.description.c_str());
    }
    return 0;
  }

  try {
    std::string source_label;
    const nlohmann::json doc =
        tempo::scenario::load_scenario(scenario_ref, &source_label);

    tempo::scenario::RunOptions options;
    if (seed_set) options.seed = seed;
    if (tol_set) options.tol = tol;
    if (horizon_set) options.horizon = horizon;
    options.out_dir = out_dir;

    const tempo::scenario::RunResult result =
        tempo::scenario::run_scenario(doc, options, source_label);

    if (format == "text") {
      print_text_report(result.report);
    } else {
      std::cout << result.report.dump(2) << "\n";
    }
    if (!out_dir.empty()) {
      namespace fs = std::filesystem;
      fs::create_directories(out_dir);
      std::ofstream out(fs::path(out_dir) / "report.json");
      out << result.report.dump(2) << "\n";
    }
    return result.exit_code();
  } catch (const tempo::ParseError& e) {
    std::cerr << "parse error at byte " << e.position() << ": " << e.what() << "\n";
    return 2;
  } catch (const tempo::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const tempo::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
