#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "tempo/errors.hpp"
#include "tempo/flow.hpp"
#include "tempo/scenario.hpp"

using namespace tempo;
using nlohmann::json;

namespace {

// Minimal fast scenario: free particle with two cheap checks.
json small_doc() {
  return json::parse(R"({
    "name": "unit",
    "seed": 424242,
    "system": {
      "type": "classical",
      "coordinates": ["q", "p"],
      "hamiltonian": "p^2 / 2",
      "domain": ["p"]
    },
    "checks": [
      {
        "type": "local_timeliness",
        "tau": "q / p",
        "states": {"count": 5, "box": [[-1, 1], [0.5, 2]]},
        "tol": 1e-9
      },
      {
        "type": "timeliness",
        "tau": "q / p",
        "states": [[0, 1]],
        "grid": {"from": 0, "to": 2, "nodes": 5},
        "tol": 1e-6
      }
    ]
  })");
}

json strip_timing(json node) {
  if (node.is_object()) node.erase("timing_ms");
  if (node.is_structured()) {
    for (auto& child : node) child = strip_timing(child);
  }
  return node;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("tempo_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("builtin examples are listed and loadable") {
  const auto& examples = scenario::builtin_examples();
  REQUIRE(examples.size() == 6);
  for (const auto& e : examples) {
    CHECK_FALSE(e.description.empty());
    const auto doc = scenario::builtin_document(e.name);
    REQUIRE(doc.has_value());
    CHECK(doc->at("name").get<std::string>() == e.name);
  }
  CHECK_FALSE(scenario::builtin_document("no_such_example").has_value());
}

TEST_CASE("load_scenario resolves builtins and files, rejects junk") {
  std::string source;
  const json doc = scenario::load_scenario("pendulum", &source);
  CHECK(source == "builtin:pendulum");
  CHECK(doc.at("system").at("hamiltonian").get<std::string>() ==
        "p^2 / 2 - cos(q)");

  CHECK_THROWS_AS(scenario::load_scenario("definitely_not_here", nullptr),
                  ConfigError);

  TempDir tmp;
  const auto bad = tmp.path / "bad.json";
  std::ofstream(bad) << "{\"name\": ";
  try {
    scenario::load_scenario(bad.string(), nullptr);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position() > 0);
  }
}

TEST_CASE("a small scenario runs, passes, and produces a structured report") {
  const auto result = scenario::run_scenario(small_doc(), {}, "unit");
  CHECK(result.all_passed);
  CHECK(result.exit_code() == 0);
  const json& report = result.report;
  CHECK(report.at("verdict") == "pass");
  CHECK(report.at("seed").get<std::uint64_t>() == 424242);
  CHECK(report.at("scenario").at("name") == "unit");
  CHECK(report.at("scenario").at("source") == "unit");
  CHECK(report.at("scenario").at("config_hash").get<std::string>().size() == 16);
  REQUIRE(report.at("checks").size() == 2);
  for (const auto& check : report.at("checks")) {
    CHECK(check.at("verdict") == "pass");
    CHECK(check.contains("timing_ms"));
    CHECK(check.contains("details"));
  }
}

TEST_CASE("reports are deterministic apart from timings") {
  const auto first = scenario::run_scenario(small_doc(), {}, "unit");
  const auto second = scenario::run_scenario(small_doc(), {}, "unit");
  CHECK(strip_timing(first.report).dump() == strip_timing(second.report).dump());
}

TEST_CASE("the seed option changes sampled states but is recorded") {
  scenario::RunOptions options;
  options.seed = 7;
  const auto result = scenario::run_scenario(small_doc(), options, "unit");
  CHECK(result.report.at("seed").get<std::uint64_t>() == 7);
  CHECK(result.all_passed);
}

TEST_CASE("the tol override can force failures without touching the document") {
  scenario::RunOptions options;
  options.tol = 1e-16;  // below integration accuracy
  const auto result = scenario::run_scenario(small_doc(), options, "unit");
  CHECK_FALSE(result.all_passed);
  CHECK(result.exit_code() == 1);
}

TEST_CASE("configuration problems throw instead of reporting") {
  json doc = small_doc();
  SUBCASE("unknown check type") {
    doc["checks"][0]["type"] = "nonsense";
    CHECK_THROWS_AS(scenario::run_scenario(doc, {}, "unit"), ConfigError);
  }
  SUBCASE("bad expression") {
    doc["checks"][0]["tau"] = "q +";
    CHECK_THROWS_AS(scenario::run_scenario(doc, {}, "unit"), ParseError);
  }
  SUBCASE("unknown coordinate in an expression") {
    doc["checks"][0]["tau"] = "x / p";
    CHECK_THROWS_AS(scenario::run_scenario(doc, {}, "unit"), ParseError);
  }
  SUBCASE("odd coordinate count") {
    doc["system"]["coordinates"] = {"q", "p", "r"};
    CHECK_THROWS_AS(scenario::run_scenario(doc, {}, "unit"), ConfigError);
  }
  SUBCASE("grid without zero") {
    doc["checks"][1]["grid"] = {1.0, 2.0};
    CHECK_THROWS_AS(scenario::run_scenario(doc, {}, "unit"), ConfigError);
  }
  SUBCASE("quantum check against a classical system") {
    doc["checks"][0] = {{"type", "kahler_identities"}, {"samples", 5}};
    CHECK_THROWS_AS(scenario::run_scenario(doc, {}, "unit"), ConfigError);
  }
}

TEST_CASE("runtime check failures become error verdicts, not aborts") {
  json doc = small_doc();
  // A clock anchored at a stationary point without expect_error: the
  // construction throws at run time; the harness must catch it, mark the
  // check, and keep going.
  doc["system"] = {{"type", "classical"},
                   {"coordinates", {"q", "p"}},
                   {"hamiltonian", "(q^2 + p^2) / 2"}};
  doc["checks"] = json::array();
  doc["checks"].push_back({{"type", "construct_clock"},
                           {"anchors", {{0.0, 0.0}}},
                           {"radius", 0.2},
                           {"tol", 1e-6}});
  doc["checks"].push_back({{"type", "local_timeliness"},
                           {"tau", "q"},
                           {"states", {{0.0, 1.0}}},
                           {"tol", 10.0}});
  const auto result = scenario::run_scenario(doc, {}, "unit");
  CHECK_FALSE(result.all_passed);
  REQUIRE(result.report.at("checks").size() == 2);
  const auto& first = result.report.at("checks").at(0);
  const bool failed_or_error =
      first.at("verdict") == "fail" || first.at("verdict") == "error";
  CHECK(failed_or_error);
  CHECK(result.report.at("checks").at(1).at("verdict") == "pass");
}

TEST_CASE("config_hash is stable and content-sensitive") {
  const json a = {{"x", 1}};
  const json b = {{"x", 2}};
  CHECK(scenario::config_hash(a) == scenario::config_hash(a));
  CHECK(scenario::config_hash(a) != scenario::config_hash(b));
  CHECK(scenario::config_hash(a).size() == 16);
}

TEST_CASE("trajectory CSV has a header and full-precision rows") {
  flow::Trajectory t;
  t.parameter_samples = {0.0, 0.5};
  Vec a(2), b(2);
  a << 0.1, 1.0;
  b << 0.6000000000000001, 1.0;
  t.states = {a, b};
  const std::string csv = scenario::trajectory_csv(t, {"q", "p"});
  CHECK(csv.rfind("t,q,p\n", 0) == 0);
  CHECK(csv.find("0.60000000000000009") != std::string::npos);
  CHECK(csv.find("\n0.5,") != std::string::npos);
}

TEST_CASE("trajectory outputs are written under the output directory") {
  json doc = json::parse(R"({
    "name": "traj",
    "system": {
      "type": "classical",
      "coordinates": ["q", "p"],
      "hamiltonian": "p^2 / 2"
    },
    "outputs": {
      "trajectories": [
        {"path": "orbit.csv", "initial_state": [0, 1], "span": [0, 1]}
      ]
    }
  })");
  TempDir tmp;
  scenario::RunOptions options;
  options.out_dir = tmp.path.string();
  const auto result = scenario::run_scenario(doc, options, "inline");
  REQUIRE(result.written_files.size() == 1);
  CHECK(std::filesystem::exists(result.written_files[0]));
  std::ifstream in(result.written_files[0]);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,q,p");

  SUBCASE("path traversal in output names is rejected") {
    doc["outputs"]["trajectories"][0]["path"] = "../escape.csv";
    CHECK_THROWS_AS(scenario::run_scenario(doc, options, "inline"), ConfigError);
  }
}

TEST_CASE("builtin quantum documents parse into quantum systems") {
  const auto doc = scenario::builtin_document("qubit_pauli_demo");
  REQUIRE(doc.has_value());
  CHECK(doc->at("system").at("type") == "quantum");
  CHECK(doc->at("system").at("dim") == 2);
}
