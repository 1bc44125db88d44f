#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "emrs/fault.hpp"
#include "emrs/harness/campaign.hpp"
#include "emrs/telemetry.hpp"

namespace emrs::harness {

/// One commanded leg of a scripted run.
struct Segment {
  std::string label;
  double commanded_speed_mps{0};
  double planned_distance_m{0};
  double distance_m{0};
  double duration_s{0};
  double mean_speed_mps{0};
  double cross_track_drift_m{0};
  double slip_ratio_mean{0};
  bool reached{false};

  bool operator==(const Segment&) const = default;
};

struct Metrics {
  double mean_speed_mps{0};
  double slip_ratio_mean{0};
  double slip_ratio_max{0};
  double cross_track_drift_m{0};
  std::optional<double> yaw_efficiency;
  double max_current_a{0};
  double max_temp_c{0};
  double max_pitch_deg{0};
  double max_roll_deg{0};
  bool completed{false};
  int transitions_completed{0};
  int invariant_violations{0};
  int obstacles_total{0};
  int obstacles_cleared{0};
  std::optional<FaultReason> fault;
  std::string fault_detail;
  std::vector<Segment> segments;

  bool operator==(const Metrics&) const = default;
};

enum class Verdict { Pass, ExpectedFlag, Fail };
std::string_view to_string(Verdict verdict);
std::optional<Verdict> parse_verdict(std::string_view text);

struct VerdictResult {
  Verdict verdict{Verdict::Fail};
  std::vector<Flag> flags;
  std::vector<std::string> reasons;

  bool operator==(const VerdictResult&) const = default;
};

/// Pure pass/fail rule: thresholds in `criteria`, faults, completion and flags.
VerdictResult evaluate_verdict(const Metrics& metrics, const Criteria& criteria, const std::vector<Flag>& expected);

struct TestReport {
  std::string id;
  ManoeuvreFamily family{ManoeuvreFamily::LocomotionModes};
  Manoeuvre manoeuvre;
  std::string terrain;
  std::uint64_t seed{0};
  Criteria criteria;
  std::vector<Flag> expected_flags;
  Metrics metrics;
  VerdictResult result;
  std::vector<std::string> events;
  std::string trace_ref;

  bool acceptable() const { return result.verdict != Verdict::Fail; }
};

struct CaseResult {
  TestReport report;
  std::vector<TelemetryFrame> trace;
};

std::string report_to_json(const TestReport& report);
/// Metrics, criteria and expected flags read back from a stored report.
struct StoredReport {
  std::string id;
  Criteria criteria;
  std::vector<Flag> expected_flags;
  Metrics metrics;
  VerdictResult result;
};
StoredReport report_from_json(const std::string& text);

std::string summary_to_json(const std::string& campaign_name, std::uint64_t seed, const std::vector<TestReport>& reports);
std::string metrics_table_header();
void append_metrics_rows(std::string& out, const std::string& case_id, const std::vector<TelemetryFrame>& trace);

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes <id>.json per case, summary.json and metrics.csv into `out_dir`.
void emit_reports(const std::string& campaign_name, std::uint64_t seed, const std::vector<CaseResult>& results,
                  const std::filesystem::path& out_dir);

}  // namespace emrs::harness
