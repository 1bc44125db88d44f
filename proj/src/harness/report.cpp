#include "emrs/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace emrs::harness {

using ojson = nlohmann::ordered_json;

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Pass: return "pass";
    case Verdict::ExpectedFlag: return "expected_flag";
    case Verdict::Fail: return "fail";
  }
  return "?";
}

std::optional<Verdict> parse_verdict(std::string_view text) {
  for (const auto v : {Verdict::Pass, Verdict::ExpectedFlag, Verdict::Fail}) {
    if (to_string(v) == text) return v;
  }
  return std::nullopt;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

bool contains(const std::vector<Flag>& flags, Flag f) { return std::find(flags.begin(), flags.end(), f) != flags.end(); }

}  // namespace

VerdictResult evaluate_verdict(const Metrics& m, const Criteria& c, const std::vector<Flag>& expected) {
  VerdictResult r;
  auto& why = r.reasons;
  if (m.fault) why.push_back("fault " + std::string(to_string(*m.fault)));
  if (!m.completed) why.push_back("run not completed");
  if (m.invariant_violations > 0) {
    why.push_back(std::to_string(m.invariant_violations) + " wheel-speed setpoints during reconfiguration");
  }
  if (c.required_transitions && m.transitions_completed < *c.required_transitions) {
    why.push_back("transitions " + std::to_string(m.transitions_completed) + "/" +
                  std::to_string(*c.required_transitions));
  }
  if (m.obstacles_cleared < m.obstacles_total) {
    why.push_back("obstacles cleared " + std::to_string(m.obstacles_cleared) + "/" + std::to_string(m.obstacles_total));
  }
  for (const auto& s : m.segments) {
    if (c.speed_tolerance && s.commanded_speed_mps > 0) {
      const double err = std::abs(s.mean_speed_mps / s.commanded_speed_mps - 1.0);
      if (!(err <= *c.speed_tolerance)) why.push_back(s.label + ": mean speed off by " + fmt(err * 100) + "%");
    }
    if (c.max_drift_fraction && !(s.cross_track_drift_m < *c.max_drift_fraction * s.planned_distance_m)) {
      why.push_back(s.label + ": cross-track drift " + fmt(s.cross_track_drift_m) + " m");
    }
  }
  if (c.max_mean_slip && !(m.slip_ratio_mean < *c.max_mean_slip)) {
    why.push_back("mean slip " + fmt(m.slip_ratio_mean));
  }
  if (c.min_yaw_efficiency && !(m.yaw_efficiency && *m.yaw_efficiency >= *c.min_yaw_efficiency)) {
    why.push_back("yaw efficiency " + (m.yaw_efficiency ? fmt(*m.yaw_efficiency) : std::string("n/a")));
  }
  if (c.max_current_a && !(m.max_current_a < *c.max_current_a)) why.push_back("current " + fmt(m.max_current_a) + " A");
  if (c.max_temp_c && !(m.max_temp_c < *c.max_temp_c)) why.push_back("temperature " + fmt(m.max_temp_c) + " C");

  if (c.significant_slip_below && m.yaw_efficiency && *m.yaw_efficiency < *c.significant_slip_below) {
    r.flags.push_back(Flag::SignificantSlip);
  }
  for (const auto f : r.flags) {
    if (!contains(expected, f)) why.push_back("unexpected flag " + std::string(to_string(f)));
  }
  for (const auto f : expected) {
    if (!contains(r.flags, f)) why.push_back("expected flag " + std::string(to_string(f)) + " not raised");
  }
  r.verdict = !why.empty() ? Verdict::Fail : r.flags.empty() ? Verdict::Pass : Verdict::ExpectedFlag;
  return r;
}

namespace {

ojson optional_number(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson criteria_json(const Criteria& c) {
  ojson j = ojson::object();
  j["speed_tolerance"] = optional_number(c.speed_tolerance);
  j["max_drift_fraction"] = optional_number(c.max_drift_fraction);
  j["max_mean_slip"] = optional_number(c.max_mean_slip);
  j["min_yaw_efficiency"] = optional_number(c.min_yaw_efficiency);
  j["significant_slip_below"] = optional_number(c.significant_slip_below);
  j["max_current_a"] = optional_number(c.max_current_a);
  j["max_temp_c"] = optional_number(c.max_temp_c);
  j["required_transitions"] = c.required_transitions ? ojson(*c.required_transitions) : ojson(nullptr);
  return j;
}

std::optional<double> read_optional(const ojson& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

Criteria criteria_from(const ojson& j) {
  Criteria c;
  c.speed_tolerance = read_optional(j, "speed_tolerance");
  c.max_drift_fraction = read_optional(j, "max_drift_fraction");
  c.max_mean_slip = read_optional(j, "max_mean_slip");
  c.min_yaw_efficiency = read_optional(j, "min_yaw_efficiency");
  c.significant_slip_below = read_optional(j, "significant_slip_below");
  c.max_current_a = read_optional(j, "max_current_a");
  c.max_temp_c = read_optional(j, "max_temp_c");
  if (!j.at("required_transitions").is_null()) c.required_transitions = j.at("required_transitions").get<int>();
  return c;
}

ojson segment_json(const Segment& s) {
  return ojson{{"label", s.label},
               {"commanded_speed_mps", s.commanded_speed_mps},
               {"planned_distance_m", s.planned_distance_m},
               {"distance_m", s.distance_m},
               {"duration_s", s.duration_s},
               {"mean_speed_mps", s.mean_speed_mps},
               {"cross_track_drift_m", s.cross_track_drift_m},
               {"slip_ratio_mean", s.slip_ratio_mean},
               {"reached", s.reached}};
}

Segment segment_from(const ojson& j) {
  Segment s;
  s.label = j.at("label").get<std::string>();
  s.commanded_speed_mps = j.at("commanded_speed_mps").get<double>();
  s.planned_distance_m = j.at("planned_distance_m").get<double>();
  s.distance_m = j.at("distance_m").get<double>();
  s.duration_s = j.at("duration_s").get<double>();
  s.mean_speed_mps = j.at("mean_speed_mps").get<double>();
  s.cross_track_drift_m = j.at("cross_track_drift_m").get<double>();
  s.slip_ratio_mean = j.at("slip_ratio_mean").get<double>();
  s.reached = j.at("reached").get<bool>();
  return s;
}

ojson metrics_json(const Metrics& m) {
  ojson j = ojson::object();
  j["mean_speed_mps"] = m.mean_speed_mps;
  j["slip_ratio_mean"] = m.slip_ratio_mean;
  j["slip_ratio_max"] = m.slip_ratio_max;
  j["cross_track_drift_m"] = m.cross_track_drift_m;
  j["yaw_efficiency"] = optional_number(m.yaw_efficiency);
  j["max_current_a"] = m.max_current_a;
  j["max_temp_c"] = m.max_temp_c;
  j["max_pitch_deg"] = m.max_pitch_deg;
  j["max_roll_deg"] = m.max_roll_deg;
  j["completed"] = m.completed;
  j["transitions_completed"] = m.transitions_completed;
  j["invariant_violations"] = m.invariant_violations;
  j["obstacles_total"] = m.obstacles_total;
  j["obstacles_cleared"] = m.obstacles_cleared;
  j["fault"] = m.fault ? ojson(std::string(to_string(*m.fault))) : ojson(nullptr);
  j["fault_detail"] = m.fault_detail;
  ojson segments = ojson::array();
  for (const auto& s : m.segments) segments.push_back(segment_json(s));
  j["segments"] = std::move(segments);
  return j;
}

Metrics metrics_from(const ojson& j) {
  Metrics m;
  m.mean_speed_mps = j.at("mean_speed_mps").get<double>();
  m.slip_ratio_mean = j.at("slip_ratio_mean").get<double>();
  m.slip_ratio_max = j.at("slip_ratio_max").get<double>();
  m.cross_track_drift_m = j.at("cross_track_drift_m").get<double>();
  m.yaw_efficiency = read_optional(j, "yaw_efficiency");
  m.max_current_a = j.at("max_current_a").get<double>();
  m.max_temp_c = j.at("max_temp_c").get<double>();
  m.max_pitch_deg = j.at("max_pitch_deg").get<double>();
  m.max_roll_deg = j.at("max_roll_deg").get<double>();
  m.completed = j.at("completed").get<bool>();
  m.transitions_completed = j.at("transitions_completed").get<int>();
  m.invariant_violations = j.at("invariant_violations").get<int>();
  m.obstacles_total = j.at("obstacles_total").get<int>();
  m.obstacles_cleared = j.at("obstacles_cleared").get<int>();
  if (!j.at("fault").is_null()) m.fault = parse_fault_reason(j.at("fault").get<std::string>());
  m.fault_detail = j.at("fault_detail").get<std::string>();
  for (const auto& s : j.at("segments")) m.segments.push_back(segment_from(s));
  return m;
}

ojson flags_json(const std::vector<Flag>& flags) {
  ojson j = ojson::array();
  for (const auto f : flags) j.push_back(std::string(to_string(f)));
  return j;
}

std::vector<Flag> flags_from(const ojson& j) {
  std::vector<Flag> out;
  for (const auto& f : j) {
    if (const auto flag = parse_flag(f.get<std::string>())) out.push_back(*flag);
  }
  return out;
}

ojson manoeuvre_json(const Manoeuvre& m) {
  ojson j = ojson::object();
  j["type"] = std::string(type_name(m));
  std::visit(
      [&]<typename T>(const T& x) {
        if constexpr (std::is_same_v<T, manoeuvre::ModeMatrix>) {
          j["hold_s"] = x.hold_s;
        } else if constexpr (std::is_same_v<T, manoeuvre::FlatTraverse>) {
          j["speeds_mps"] = x.speeds_mps;
          j["distance_m"] = x.distance_m;
        } else if constexpr (std::is_same_v<T, manoeuvre::UpSlope> || std::is_same_v<T, manoeuvre::CrossSlope>) {
          j["angle_deg"] = x.angle_deg;
          j["speed_mps"] = x.speed_mps;
          j["distance_m"] = x.distance_m;
        } else if constexpr (std::is_same_v<T, manoeuvre::PointTurnOnSlope>) {
          j["angle_deg"] = x.angle_deg;
          j["yaw_rate_radps"] = x.yaw_rate_radps;
          j["turn_deg"] = x.turn_deg;
        } else if constexpr (std::is_same_v<T, manoeuvre::ObstacleRun>) {
          j["heights_m"] = x.heights_m;
          j["speed_mps"] = x.speed_mps;
          j["spacing_m"] = x.spacing_m;
        } else if constexpr (std::is_same_v<T, manoeuvre::Excavation>) {
          j["payload_kg"] = x.payload_kg;
          j["drag_n"] = x.drag_n;
          j["speed_mps"] = x.speed_mps;
          j["distance_m"] = x.distance_m;
        }
      },
      m);
  return j;
}

ojson requirements_json() {
  using R = RequirementConstants;
  return ojson{{"min_traverse_speed_mps", R::kMinTraverseSpeedMps},
               {"max_static_pitch_roll_deg", R::kMaxStaticPitchRollDeg},
               {"isru_payload_kg", R::kIsruPayloadKg},
               {"isru_cycles", R::kIsruCycles},
               {"isru_total_kg", R::kIsruTotalKg}};
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::string report_to_json(const TestReport& r) {
  ojson j = ojson::object();
  j["id"] = r.id;
  j["family"] = std::string(to_string(r.family));
  j["manoeuvre"] = manoeuvre_json(r.manoeuvre);
  j["terrain"] = r.terrain;
  j["seed"] = r.seed;
  j["verdict"] = std::string(to_string(r.result.verdict));
  j["reasons"] = r.result.reasons;
  j["flags"] = flags_json(r.result.flags);
  j["expected_flags"] = flags_json(r.expected_flags);
  j["criteria"] = criteria_json(r.criteria);
  j["metrics"] = metrics_json(r.metrics);
  if (std::holds_alternative<manoeuvre::Excavation>(r.manoeuvre)) j["requirements"] = requirements_json();
  j["events"] = r.events;
  j["trace_ref"] = r.trace_ref;
  return j.dump(2) + "\n";
}

StoredReport report_from_json(const std::string& text) {
  const auto j = ojson::parse(text);
  StoredReport s;
  s.id = j.at("id").get<std::string>();
  s.criteria = criteria_from(j.at("criteria"));
  s.expected_flags = flags_from(j.at("expected_flags"));
  s.metrics = metrics_from(j.at("metrics"));
  s.result.verdict = parse_verdict(j.at("verdict").get<std::string>()).value_or(Verdict::Fail);
  s.result.flags = flags_from(j.at("flags"));
  s.result.reasons = j.at("reasons").get<std::vector<std::string>>();
  return s;
}

std::string summary_to_json(const std::string& campaign_name, std::uint64_t seed, const std::vector<TestReport>& reports) {
  ojson j = ojson::object();
  j["campaign"] = campaign_name;
  j["seed"] = seed;
  int pass = 0, flagged = 0, fail = 0;
  ojson cases = ojson::array();
  ojson families = ojson::object();
  for (const auto f : kAllFamilies) families[std::string(to_string(f))] = 0;
  ojson excavation = ojson::array();
  for (const auto& r : reports) {
    switch (r.result.verdict) {
      case Verdict::Pass: ++pass; break;
      case Verdict::ExpectedFlag: ++flagged; break;
      case Verdict::Fail: ++fail; break;
    }
    const std::string family(to_string(r.family));
    families[family] = families[family].get<int>() + 1;
    cases.push_back(ojson{{"id", r.id}, {"family", family}, {"verdict", std::string(to_string(r.result.verdict))},
                          {"flags", flags_json(r.result.flags)}, {"reasons", r.result.reasons}});
    if (const auto* ex = std::get_if<manoeuvre::Excavation>(&r.manoeuvre)) {
      excavation.push_back(ojson{{"id", r.id},
                                 {"payload_kg", ex->payload_kg},
                                 {"drag_n", ex->drag_n},
                                 {"max_current_a", r.metrics.max_current_a},
                                 {"max_temp_c", r.metrics.max_temp_c},
                                 {"verdict", std::string(to_string(r.result.verdict))}});
    }
  }
  j["totals"] = ojson{{"cases", reports.size()}, {"pass", pass}, {"expected_flag", flagged}, {"fail", fail}};
  j["all_acceptable"] = fail == 0;
  j["families"] = families;
  j["cases"] = cases;
  using R = RequirementConstants;
  j["requirements"] = requirements_json();
  j["excavation"] = ojson{{"runs", excavation},
                          {"isru_payload_per_cycle_kg", R::kIsruPayloadKg},
                          {"isru_cycles", R::kIsruCycles},
                          {"isru_total_kg", R::kIsruPayloadKg * R::kIsruCycles}};
  return j.dump(2) + "\n";
}

std::string metrics_table_header() {
  return "case_id,t_s,sequence,state,mode,x_m,y_m,yaw_rad,pitch_rad,roll_rad,tracked_x_m,tracked_y_m,"
         "tracked_yaw_rad,cmd_vx_mps,cmd_vy_mps,cmd_omega_radps,vx_mps,vy_mps,omega_radps,slip_mean,slip_max,"
         "max_current_a,max_temp_c,fault\n";
}

void append_metrics_rows(std::string& out, const std::string& case_id, const std::vector<TelemetryFrame>& trace) {
  for (const auto& f : trace) {
    double slip_sum = 0, slip_max = 0, current = 0, temp = 0;
    for (const auto& w : f.wheels) {
      slip_sum += w.slip_ratio;
      slip_max = std::max(slip_max, w.slip_ratio);
      current = std::max({current, std::abs(w.drive_current_a), std::abs(w.steer_current_a)});
      temp = std::max({temp, w.drive_temp_c, w.steer_temp_c});
    }
    const double values[] = {f.true_pose.x_m,          f.true_pose.y_m,         f.true_pose.yaw_rad,
                             f.true_pose.pitch_rad,    f.true_pose.roll_rad,    f.tracked_pose.x_m,
                             f.tracked_pose.y_m,       f.tracked_pose.yaw_rad,  f.commanded_twist.vx_mps,
                             f.commanded_twist.vy_mps, f.commanded_twist.omega_radps, f.actual_twist.vx_mps,
                             f.actual_twist.vy_mps,    f.actual_twist.omega_radps, slip_sum / kWheelCount,
                             slip_max,                 current,                 temp};
    out += case_id;
    out += ',' + fmt(f.timestamp_s) + ',' + std::to_string(f.sequence) + ',' + std::string(to_string(f.manager_state)) +
           ',' + (f.mode ? std::string(to_string(*f.mode)) : std::string());
    for (const double v : values) out += ',' + fmt(v);
    out += ',' + (f.fault ? std::string(to_string(*f.fault)) : std::string()) + '\n';
  }
}

void emit_reports(const std::string& campaign_name, std::uint64_t seed, const std::vector<CaseResult>& results,
                  const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<TestReport> reports;
  std::string table = metrics_table_header();
  for (const auto& r : results) {
    write_file(out_dir / (r.report.id + ".json"), report_to_json(r.report));
    append_metrics_rows(table, r.report.id, r.trace);
    reports.push_back(r.report);
  }
  write_file(out_dir / "summary.json", summary_to_json(campaign_name, seed, reports));
  write_file(out_dir / "metrics.csv", table);
}

}  // namespace emrs::harness
