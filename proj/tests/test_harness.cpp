#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"
#include "emrs/harness/campaign.hpp"
#include "emrs/harness/report.hpp"
#include "emrs/harness/runner.hpp"
#include "emrs/harness/scenario.hpp"
#include "json.hpp"

using namespace emrs;
using namespace emrs::harness;
namespace fs = std::filesystem;

namespace {

const fs::path kData = EMRS_DATA_DIR;

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A one-case campaign next to the shipped scenario.
std::string campaign_with(const std::string& case_json) {
  return R"({"schema": "emrs-campaign/1", "name": "t", "scenario_file": "default_scenario.json", "seed": 1,
             "cases": [)" +
         case_json + "]}";
}

ConfigError::Kind campaign_error(const std::string& text) {
  try {
    parse_campaign(text, kData / "inline.json");
  } catch (const ConfigError& e) {
    return e.kind();
  }
  FAIL("campaign was accepted");
  return ConfigError::Kind::IoError;
}

Metrics passing_metrics() {
  Metrics m;
  m.completed = true;
  m.mean_speed_mps = 0.05;
  m.max_current_a = 4;
  m.max_temp_c = 30;
  Segment s;
  s.commanded_speed_mps = 0.05;
  s.planned_distance_m = 3;
  s.distance_m = 3;
  s.mean_speed_mps = 0.049;
  s.cross_track_drift_m = 0.01;
  s.reached = true;
  m.segments.push_back(s);
  return m;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("emrs_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("default scenario and campaign load") {
  const auto scenario = load_scenario(default_scenario_path());
  CHECK(scenario.rng_algorithm == "mt19937_64");
  CHECK(scenario.terrains.contains("pel"));
  CHECK(scenario.terrains.contains("spot"));
  CHECK(scenario.terrain("pel").tilt_bed.has_value());
  CHECK_THROWS_AS(scenario.terrain("nowhere"), ConfigError);

  const auto campaign = load_campaign(default_campaign_path());
  CHECK(campaign.cases.size() == 20);
  std::set<ManoeuvreFamily> families;
  std::set<std::string> ids;
  for (const auto& tc : campaign.cases) {
    families.insert(family_of(tc.manoeuvre));
    ids.insert(tc.id);
  }
  CHECK(families.size() == 6);
  CHECK(ids.size() == campaign.cases.size());
  REQUIRE(campaign.find("point_turn_slope_25"));
  CHECK(family_of(campaign.find("point_turn_slope_25")->manoeuvre) == ManoeuvreFamily::LocomotionModes);
  CHECK(campaign.find("point_turn_slope_25")->expected_flags == std::vector<Flag>{Flag::SignificantSlip});
}

TEST_CASE("campaign parse errors") {
  CHECK(campaign_error("") == ConfigError::Kind::ParseError);
  try {
    parse_campaign("{\n  \"schema\": \"emrs-campaign/1\",\n  oops\n}", kData / "x.json");
    FAIL("accepted");
  } catch (const ConfigError& e) {
    CHECK(e.kind() == ConfigError::Kind::ParseError);
    CHECK(e.location().find("line 3") != std::string::npos);
  }
  CHECK(campaign_error(R"({"schema": "emrs-campaign/2", "name": "t", "scenario_file": "default_scenario.json",
                          "cases": []})") == ConfigError::Kind::SchemaViolation);
}

TEST_CASE("campaign schema violations") {
  const std::string up = R"({"id": "u", "manoeuvre": {"type": "up_slope", "angle_deg": %A%}})";
  const auto with_angle = [&](const std::string& a) {
    std::string s = up;
    s.replace(s.find("%A%"), 3, a);
    return campaign_with(s);
  };
  CHECK_NOTHROW(parse_campaign(with_angle("30"), kData / "x.json"));
  CHECK(campaign_error(with_angle("35")) == ConfigError::Kind::SchemaViolation);
  CHECK(campaign_error(with_angle("\"steep\"")) == ConfigError::Kind::SchemaViolation);

  try {
    parse_campaign(campaign_with(R"({"id": "u", "manoeuvre": {"type": "up_slope", "angle_deg": 5, "colour": 1}})"),
                   kData / "x.json");
    FAIL("accepted");
  } catch (const ConfigError& e) {
    CHECK(e.kind() == ConfigError::Kind::SchemaViolation);
    CHECK(e.location().find("colour") != std::string::npos);
  }
  CHECK(campaign_error(campaign_with(R"({"id": "a", "manoeuvre": {"type": "mode_matrix"}},
                                        {"id": "a", "manoeuvre": {"type": "mode_matrix"}})")) ==
        ConfigError::Kind::SchemaViolation);
  CHECK(campaign_error(campaign_with(R"({"id": "a", "terrain": "moon", "manoeuvre": {"type": "mode_matrix"}})")) ==
        ConfigError::Kind::SchemaViolation);
  CHECK(campaign_error(campaign_with(R"({"id": "a", "manoeuvre": {"type": "moonwalk"}})")) ==
        ConfigError::Kind::SchemaViolation);
  CHECK(campaign_error(campaign_with(
            R"({"id": "a", "manoeuvre": {"type": "mode_matrix"}, "expected_flags": ["wobble"]})")) ==
        ConfigError::Kind::SchemaViolation);
}

TEST_CASE("scenario schema violations") {
  const auto text = read_text(default_scenario_path());
  CHECK_NOTHROW(parse_scenario(text));
  auto j = nlohmann::json::parse(text);
  j["rover"]["wheel_radius_m"] = -0.1;
  CHECK_THROWS_AS(parse_scenario(j.dump()), ConfigError);
  j = nlohmann::json::parse(text);
  j["surprise"] = true;
  try {
    parse_scenario(j.dump());
    FAIL("accepted");
  } catch (const ConfigError& e) {
    CHECK(e.kind() == ConfigError::Kind::SchemaViolation);
  }
  CHECK_THROWS_AS(load_scenario(kData / "missing.json"), ConfigError);
}

TEST_CASE("verdict rule") {
  Criteria c;
  c.speed_tolerance = 0.05;
  c.max_drift_fraction = 0.02;
  c.max_current_a = 10;
  c.max_temp_c = 80;
  auto m = passing_metrics();
  CHECK(evaluate_verdict(m, c, {}).verdict == Verdict::Pass);

  auto slow = m;
  slow.segments[0].mean_speed_mps = 0.045;
  CHECK(evaluate_verdict(slow, c, {}).verdict == Verdict::Fail);

  auto drifting = m;
  drifting.segments[0].cross_track_drift_m = 0.06;
  CHECK(evaluate_verdict(drifting, c, {}).verdict == Verdict::Fail);

  auto faulted = m;
  faulted.fault = FaultReason::OverCurrent;
  CHECK(evaluate_verdict(faulted, c, {}).verdict == Verdict::Fail);

  auto at_limit = m;
  at_limit.max_current_a = 10;
  CHECK(evaluate_verdict(at_limit, c, {}).verdict == Verdict::Fail);

  auto unfinished = m;
  unfinished.completed = false;
  CHECK(evaluate_verdict(unfinished, c, {}).verdict == Verdict::Fail);

  Criteria turn;
  turn.significant_slip_below = 0.8;
  auto slipping = passing_metrics();
  slipping.segments.clear();
  slipping.yaw_efficiency = 0.7;
  const auto flagged = evaluate_verdict(slipping, turn, {Flag::SignificantSlip});
  CHECK(flagged.verdict == Verdict::ExpectedFlag);
  CHECK(flagged.flags == std::vector<Flag>{Flag::SignificantSlip});
  CHECK(evaluate_verdict(slipping, turn, {}).verdict == Verdict::Fail);
  slipping.yaw_efficiency = 0.95;
  CHECK(evaluate_verdict(slipping, turn, {Flag::SignificantSlip}).verdict == Verdict::Fail);
  turn.min_yaw_efficiency = 0.9;
  CHECK(evaluate_verdict(slipping, turn, {}).verdict == Verdict::Pass);
  slipping.yaw_efficiency = 0.85;
  CHECK(evaluate_verdict(slipping, turn, {}).verdict == Verdict::Fail);

  Criteria modes;
  modes.required_transitions = 12;
  auto matrix = passing_metrics();
  matrix.segments.clear();
  matrix.transitions_completed = 12;
  CHECK(evaluate_verdict(matrix, modes, {}).verdict == Verdict::Pass);
  matrix.invariant_violations = 1;
  CHECK(evaluate_verdict(matrix, modes, {}).verdict == Verdict::Fail);
  matrix.invariant_violations = 0;
  matrix.transitions_completed = 11;
  CHECK(evaluate_verdict(matrix, modes, {}).verdict == Verdict::Fail);

  auto obstacles = passing_metrics();
  obstacles.obstacles_total = 2;
  obstacles.obstacles_cleared = 1;
  CHECK(evaluate_verdict(obstacles, {}, {}).verdict == Verdict::Fail);
}

TEST_CASE("mode transition circuit covers every ordered pair once") {
  const auto circuit = mode_transition_circuit();
  std::set<std::pair<LocomotionMode, LocomotionMode>> pairs;
  for (std::size_t i = 1; i < circuit.size(); ++i) {
    CHECK(circuit[i] != circuit[i - 1]);
    pairs.insert({circuit[i - 1], circuit[i]});
  }
  CHECK(circuit.size() == 13);
  CHECK(pairs.size() == 12);
}

TEST_CASE("mode matrix passes with all transitions") {
  const auto scenario = load_scenario(default_scenario_path());
  const auto result = mode_matrix_case(scenario, 42);
  CHECK(result.report.result.verdict == Verdict::Pass);
  CHECK(result.report.metrics.transitions_completed == 12);
  CHECK(result.report.metrics.invariant_violations == 0);
  CHECK_FALSE(result.report.metrics.fault);
}

TEST_CASE("stalled steering actuator times out the transition") {
  const auto scenario = load_scenario(default_scenario_path());
  const auto result = mode_matrix_case(scenario, 42, StallInjection{2, 3.0});
  CHECK(result.report.result.verdict == Verdict::Fail);
  CHECK(result.report.metrics.fault == FaultReason::TransitionTimeout);
}

TEST_CASE("stored reports recompute to the same verdict") {
  const auto campaign = load_campaign(default_campaign_path());
  for (const auto* id : {"flat_min_speed", "point_turn_slope_25", "excavation_haul"}) {
    const auto* tc = campaign.find(id);
    REQUIRE(tc);
    const auto result = run_case(*tc, campaign.scenario, campaign.seed);
    const auto stored = report_from_json(report_to_json(result.report));
    CHECK(stored.id == id);
    CHECK(stored.metrics == result.report.metrics);
    CHECK(evaluate_verdict(stored.metrics, stored.criteria, stored.expected_flags) == stored.result);
    CHECK(stored.result == result.report.result);
  }
}

TEST_CASE("runs are deterministic in the seed") {
  const auto campaign = load_campaign(default_campaign_path());
  const auto* tc = campaign.find("cross_slope_15");
  REQUIRE(tc);
  const auto a = run_case(*tc, campaign.scenario, 7);
  const auto b = run_case(*tc, campaign.scenario, 7);
  CHECK(report_to_json(a.report) == report_to_json(b.report));
  CHECK(a.trace == b.trace);
  const auto c = run_case(*tc, campaign.scenario, 8);
  CHECK(a.trace != c.trace);
}

TEST_CASE("campaign emission") {
  const auto campaign = load_campaign(default_campaign_path());
  const auto results = run_campaign(campaign);
  for (const auto& r : results) CHECK_MESSAGE(r.report.acceptable(), r.report.id);

  const auto first = fresh_dir("emit_a");
  const auto second = fresh_dir("emit_b");
  emit_reports(campaign.name, campaign.seed, results, first);
  emit_reports(campaign.name, campaign.seed, run_campaign(campaign), second);

  int files = 0;
  for (const auto& entry : fs::directory_iterator(first)) {
    ++files;
    CHECK(read_text(entry.path()) == read_text(second / entry.path().filename()));
  }
  CHECK(files == 22);

  const auto summary = nlohmann::json::parse(read_text(first / "summary.json"));
  CHECK(summary["totals"]["cases"] == 20);
  CHECK(summary["totals"]["fail"] == 0);
  CHECK(summary["excavation"]["isru_total_kg"] == 12600);
  CHECK(summary["families"].size() == 6);

  const auto header = read_text(first / "metrics.csv").substr(0, metrics_table_header().size());
  CHECK(header == metrics_table_header());
  fs::remove_all(first);
  fs::remove_all(second);
}

TEST_CASE("unwritable output directory is an io error") {
  const auto campaign = load_campaign(default_campaign_path());
  CHECK_THROWS_AS(emit_reports("x", 1, {}, "/proc/emrs-cannot-write"), IoError);
}
