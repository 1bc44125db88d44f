#include "emrs/harness/runner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

#include "emrs/harness/rover_loop.hpp"

namespace emrs::harness {

namespace mc = manager_command;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kStreamPeriodS = 0.1;
constexpr double kSettleS = 1.0;
constexpr double kModeChangeTimeoutS = 30.0;

/// Executes a scripted run against a RoverLoop and accumulates metrics.
class Script {
 public:
  Script(const ScenarioSet& scenario, sim::TerrainModel terrain, const Pose2p5& start, const sim::SplitRng& rng)
      : loop_(scenario, std::move(terrain), start, rng), course_(start.yaw_rad) {}

  RoverLoop& loop() { return loop_; }
  Metrics& metrics() { return metrics_; }
  std::vector<TelemetryFrame>& trace() { return trace_; }
  bool aborted() const { return loop_.fault().has_value(); }

  void set_stall(StallInjection s) { stall_ = s; }

  /// Requests a mode and waits for Driving in it. Returns false on fault or timeout.
  bool change_mode(LocomotionMode mode) {
    if (aborted()) return false;
    loop_.command(mc::ChangeMode{mode});
    stream_ = mc::Speed{zero_command(mode)};
    next_stream_ = loop_.time_s() + kStreamPeriodS;
    const double deadline = loop_.time_s() + kModeChangeTimeoutS;
    while (loop_.time_s() < deadline && !aborted()) {
      if (const auto* d = std::get_if<manager_state::Driving>(&loop_.manager().state()); d && d->mode == mode) {
        return true;
      }
      advance();
    }
    return false;
  }

  void hold(const BodyMotionCommand& cmd, double duration_s) {
    send(cmd);
    const double end = loop_.time_s() + duration_s;
    while (loop_.time_s() < end - 1e-9 && !aborted()) advance();
  }

  void stop(double duration_s) {
    if (const auto m = loop_.manager().mode()) hold(zero_command(*m), duration_s);
  }

  /// Distance-bounded straight leg measured from the tracked pose. Drift is
  /// taken against the scripted course through the leg's start point.
  Segment drive(std::string label, const BodyMotionCommand& cmd, double speed_mps, double distance_m) {
    Segment s;
    s.label = std::move(label);
    s.commanded_speed_mps = speed_mps;
    s.planned_distance_m = distance_m;
    const auto p0 = loop_.tracked().pose;
    const double h0 = ground_height(p0);
    const Eigen::Vector2d along(std::cos(course_), std::sin(course_));
    const double t0 = loop_.time_s();
    const double limit = 3.0 * distance_m / speed_mps + 10.0;
    double slip_sum = 0;
    long slip_n = 0;
    send(cmd);
    while (!aborted() && loop_.time_s() - t0 < limit) {
      advance();
      slip_sum += mean_slip();
      ++slip_n;
      if (!loop_.tracking_updated()) continue;
      const auto& p = loop_.tracked().pose;
      const Eigen::Vector2d d(p.x_m - p0.x_m, p.y_m - p0.y_m);
      s.cross_track_drift_m = std::max(s.cross_track_drift_m, std::abs(along.x() * d.y() - along.y() * d.x()));
      s.distance_m = std::hypot(d.norm(), ground_height(p) - h0);
      if (s.distance_m >= distance_m) {
        s.reached = true;
        break;
      }
    }
    s.duration_s = loop_.time_s() - t0;
    s.mean_speed_mps = s.duration_s > 0 ? s.distance_m / s.duration_s : 0.0;
    s.slip_ratio_mean = slip_n > 0 ? slip_sum / static_cast<double>(slip_n) : 0.0;
    motion_slip_sum_ += slip_sum;
    motion_slip_n_ += slip_n;
    stop(kSettleS);
    metrics_.segments.push_back(s);
    return s;
  }

  /// Point turn for a fixed time; returns achieved / commanded yaw.
  double turn(double omega_radps, double angle_rad) {
    const double duration = angle_rad / std::abs(omega_radps);
    double yaw_prev = loop_.tracked().pose.yaw_rad;
    double yaw_sum = 0;
    double slip_sum = 0;
    long slip_n = 0;
    const double t0 = loop_.time_s();
    send(PointTurnCommand<double>{omega_radps});
    while (!aborted() && loop_.time_s() < t0 + duration - 1e-9) {
      advance();
      slip_sum += mean_slip();
      ++slip_n;
      if (loop_.tracking_updated()) {
        const double yaw = loop_.tracked().pose.yaw_rad;
        yaw_sum += normalize_angle(yaw - yaw_prev);
        yaw_prev = yaw;
      }
    }
    Segment s;
    s.label = "turn";
    s.duration_s = loop_.time_s() - t0;
    s.slip_ratio_mean = slip_n > 0 ? slip_sum / static_cast<double>(slip_n) : 0.0;
    s.reached = !aborted();
    metrics_.segments.push_back(s);
    motion_slip_sum_ += slip_sum;
    motion_slip_n_ += slip_n;
    stop(kSettleS);
    return yaw_sum / (omega_radps * duration);
  }

  void finish(bool script_done) {
    const auto& m = metrics_.segments;
    double distance = 0, duration = 0;
    for (const auto& s : m) {
      if (s.commanded_speed_mps <= 0) continue;
      distance += s.distance_m;
      duration += s.duration_s;
      metrics_.cross_track_drift_m = std::max(metrics_.cross_track_drift_m, s.cross_track_drift_m);
    }
    metrics_.mean_speed_mps = duration > 0 ? distance / duration : 0.0;
    metrics_.slip_ratio_mean = motion_slip_n_ > 0 ? motion_slip_sum_ / static_cast<double>(motion_slip_n_) : 0.0;
    metrics_.fault = loop_.fault();
    metrics_.fault_detail = loop_.fault_detail();
    metrics_.completed = script_done && !aborted() &&
                         std::all_of(m.begin(), m.end(), [](const Segment& s) { return s.reached; });
  }

  std::vector<std::string> events() const {
    std::vector<std::string> out;
    for (const auto& e : loop_.world().events()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3f", e.time_s);
      out.push_back(std::string(buf) + " " + std::string(sim::to_string(e.kind)) + ": " + e.detail);
    }
    if (const auto f = loop_.fault()) out.push_back("fault " + std::string(to_string(*f)) + ": " + loop_.fault_detail());
    return out;
  }

 private:
  void send(const BodyMotionCommand& cmd) {
    stream_ = mc::Speed{cmd};
    loop_.command(*stream_);
    next_stream_ = loop_.time_s() + kStreamPeriodS;
  }

  double ground_height(const Pose2p5& p) const {
    try {
      return loop_.world().terrain().query(p.x_m, p.y_m).height_m;
    } catch (const sim::TerrainError&) {
      return 0.0;
    }
  }

  double mean_slip() const {
    double sum = 0;
    for (const double s : loop_.world().state().slip_ratios) sum += s;
    return sum / kWheelCount;
  }

  void advance() {
    if (stall_ && loop_.time_s() >= stall_->at_s) {
      loop_.world().stall_steering(stall_->wheel);
      stall_.reset();
    }
    if (stream_ && loop_.time_s() >= next_stream_ - 1e-9) {
      loop_.command(*stream_);
      next_stream_ += kStreamPeriodS;
    }
    loop_.step();

    if (loop_.control_tick() && loop_.manager().state_kind() == ManagerStateKind::Reconfiguring) {
      for (const auto& w : loop_.manager().setpoints()) {
        if (w.wheel_speed_radps != 0.0) {
          ++metrics_.invariant_violations;
          break;
        }
      }
    }
    const auto& s = loop_.world().state();
    for (std::size_t i = 0; i < kWheelCount; ++i) {
      metrics_.max_current_a = std::max({metrics_.max_current_a, std::abs(s.drive_motors[i].current_a),
                                         std::abs(s.steer_motors[i].current_a)});
      metrics_.max_temp_c = std::max({metrics_.max_temp_c, s.drive_motors[i].temp_c, s.steer_motors[i].temp_c});
      metrics_.slip_ratio_max = std::max(metrics_.slip_ratio_max, s.slip_ratios[i]);
    }
    metrics_.max_pitch_deg = std::max(metrics_.max_pitch_deg, std::abs(s.true_pose.pitch_rad) / kDeg);
    metrics_.max_roll_deg = std::max(metrics_.max_roll_deg, std::abs(s.true_pose.roll_rad) / kDeg);
    if (loop_.telemetry_published()) trace_.push_back(loop_.telemetry());
  }

  RoverLoop loop_;
  Metrics metrics_;
  std::vector<TelemetryFrame> trace_;
  std::optional<mc::Speed> stream_;
  double next_stream_{0};
  double motion_slip_sum_{0};
  long motion_slip_n_{0};
  std::optional<StallInjection> stall_;
  double course_;
};

BodyMotionCommand demo_command(LocomotionMode mode) {
  switch (mode) {
    case LocomotionMode::Ackermann: return AckermannCommand<double>{0.05, 0.05};
    case LocomotionMode::PointTurn: return PointTurnCommand<double>{0.1};
    case LocomotionMode::Crab: return CrabCommand<double>{0.05, 0.3};
    case LocomotionMode::SkidSteer: return SkidCommand<double>{0.05, 0.05};
  }
  return {};
}

void run_mode_matrix(Script& s, const manoeuvre::ModeMatrix& m) {
  const auto circuit = mode_transition_circuit();
  std::set<std::pair<LocomotionMode, LocomotionMode>> done;
  std::optional<LocomotionMode> previous;
  bool ok = true;
  for (const auto mode : circuit) {
    if (!s.change_mode(mode)) {
      ok = false;
      break;
    }
    if (previous) done.insert({*previous, mode});
    s.hold(demo_command(mode), m.hold_s);
    s.stop(0.5);
    previous = mode;
  }
  s.metrics().transitions_completed = static_cast<int>(done.size());
  s.finish(ok);
}

void run_flat(Script& s, const manoeuvre::FlatTraverse& m) {
  bool ok = s.change_mode(LocomotionMode::Ackermann);
  for (std::size_t i = 0; ok && i < m.speeds_mps.size(); ++i) {
    const double v = m.speeds_mps[i];
    char label[48];
    std::snprintf(label, sizeof label, "traverse_%.3f_mps", v);
    ok = s.drive(label, AckermannCommand<double>{v, 0.0}, v, m.distance_m).reached;
  }
  s.finish(ok);
}

template <typename Slope>
void run_slope(Script& s, const Slope& m, const char* label) {
  bool ok = s.change_mode(LocomotionMode::Ackermann);
  if (ok) ok = s.drive(label, AckermannCommand<double>{m.speed_mps, 0.0}, m.speed_mps, m.distance_m).reached;
  s.finish(ok);
}

void run_point_turn(Script& s, const manoeuvre::PointTurnOnSlope& m) {
  bool ok = s.change_mode(LocomotionMode::PointTurn);
  if (ok) {
    s.metrics().yaw_efficiency = s.turn(m.yaw_rate_radps, m.turn_deg * kDeg);
    ok = !s.aborted();
  }
  s.finish(ok);
}

void run_obstacles(Script& s, const manoeuvre::ObstacleRun& m, const std::vector<double>& positions_x) {
  bool ok = s.change_mode(LocomotionMode::Ackermann);
  const double distance = (positions_x.back() - s.loop().world().state().true_pose.x_m) + 1.2;
  if (ok) ok = s.drive("obstacle_run", AckermannCommand<double>{m.speed_mps, 0.0}, m.speed_mps, distance).reached;
  const double x = s.loop().world().state().true_pose.x_m;
  s.metrics().obstacles_total = static_cast<int>(positions_x.size());
  for (const double px : positions_x) {
    if (x > px + 0.2 + 0.6) ++s.metrics().obstacles_cleared;
  }
  s.finish(ok);
}

void run_excavation(Script& s, const manoeuvre::Excavation& m) {
  s.loop().world().set_payload(m.payload_kg);
  s.loop().world().set_blade_drag(m.drag_n);
  bool ok = s.change_mode(LocomotionMode::Ackermann);
  if (ok) ok = s.drive("haul_forward", AckermannCommand<double>{m.speed_mps, 0.0}, m.speed_mps, m.distance_m).reached;
  if (ok) {
    ok = s.drive("haul_reverse", AckermannCommand<double>{-m.speed_mps, 0.0}, m.speed_mps, m.distance_m).reached;
  }
  s.finish(ok);
}

sim::Obstacle box(double cx, double cy, double lx, double ly, double h) {
  sim::Obstacle o;
  o.height_m = h;
  o.footprint = {{cx - lx / 2, cy - ly / 2}, {cx + lx / 2, cy - ly / 2}, {cx + lx / 2, cy + ly / 2},
                 {cx - lx / 2, cy + ly / 2}};
  return o;
}

}  // namespace

std::vector<LocomotionMode> mode_transition_circuit() {
  using M = LocomotionMode;
  constexpr M a = M::Ackermann, p = M::PointTurn, c = M::Crab, k = M::SkidSteer;
  return {a, p, a, c, a, k, p, c, p, k, c, k, a};
}

Criteria resolve_criteria(const TestCase& tc, const ScenarioSet& scenario) {
  Criteria c = tc.criteria;
  if (tc.within_safety_limits) {
    c.max_current_a = scenario.safety.max_motor_current_a;
    c.max_temp_c = scenario.safety.max_motor_temp_c;
  }
  return c;
}

CaseResult run_case(const TestCase& tc, const ScenarioSet& scenario, std::uint64_t seed) {
  sim::TerrainModel terrain = scenario.terrain(tc.terrain);
  const Pose2p5 start = tc.start.value_or(default_start(tc.manoeuvre));

  double slope_deg = 0;
  std::visit(
      [&]<typename T>(const T& m) {
        if constexpr (requires { m.angle_deg; }) slope_deg = m.angle_deg;
      },
      tc.manoeuvre);
  if (terrain.tilt_bed) terrain.set_tilt(slope_deg * kDeg);

  std::vector<double> obstacle_x;
  if (const auto* run = std::get_if<manoeuvre::ObstacleRun>(&tc.manoeuvre)) {
    const auto& g = scenario.sim.geometry;
    const double lane = start.y_m + g.track_m / 2 + g.steering_offset_m;
    for (std::size_t k = 0; k < run->heights_m.size(); ++k) {
      const double x = start.x_m + 1.5 + run->spacing_m * static_cast<double>(k);
      obstacle_x.push_back(x);
      terrain.obstacles.push_back(box(x, lane, 0.4, 0.3, run->heights_m[k]));
    }
  }

  Script script(scenario, std::move(terrain), start, sim::SplitRng(seed).split(tc.id));
  if (tc.inject) script.set_stall(*tc.inject);

  std::visit(
      [&]<typename T>(const T& m) {
        if constexpr (std::is_same_v<T, manoeuvre::ModeMatrix>) run_mode_matrix(script, m);
        if constexpr (std::is_same_v<T, manoeuvre::FlatTraverse>) run_flat(script, m);
        if constexpr (std::is_same_v<T, manoeuvre::UpSlope>) run_slope(script, m, "up_slope");
        if constexpr (std::is_same_v<T, manoeuvre::CrossSlope>) run_slope(script, m, "cross_slope");
        if constexpr (std::is_same_v<T, manoeuvre::PointTurnOnSlope>) run_point_turn(script, m);
        if constexpr (std::is_same_v<T, manoeuvre::ObstacleRun>) run_obstacles(script, m, obstacle_x);
        if constexpr (std::is_same_v<T, manoeuvre::Excavation>) run_excavation(script, m);
      },
      tc.manoeuvre);

  CaseResult out;
  auto& r = out.report;
  r.id = tc.id;
  r.family = family_of(tc.manoeuvre);
  r.manoeuvre = tc.manoeuvre;
  r.terrain = tc.terrain;
  r.seed = seed;
  r.criteria = resolve_criteria(tc, scenario);
  r.expected_flags = tc.expected_flags;
  r.metrics = std::move(script.metrics());
  r.result = evaluate_verdict(r.metrics, r.criteria, r.expected_flags);
  r.events = script.events();
  r.trace_ref = "metrics.csv#case_id=" + tc.id;
  out.trace = std::move(script.trace());
  return out;
}

CaseResult mode_matrix_case(const ScenarioSet& scenario, std::uint64_t seed, std::optional<StallInjection> inject) {
  TestCase tc;
  tc.id = "mode_matrix";
  tc.manoeuvre = manoeuvre::ModeMatrix{};
  tc.terrain = default_terrain(tc.manoeuvre);
  tc.criteria.required_transitions = 12;
  tc.inject = inject;
  return run_case(tc, scenario, seed);
}

std::vector<CaseResult> run_campaign(const Campaign& campaign, std::optional<std::uint64_t> seed,
                                     const std::optional<std::string>& only) {
  const std::uint64_t s = seed.value_or(campaign.seed);
  std::vector<CaseResult> out;
  for (const auto& tc : campaign.cases) {
    if (only && tc.id != *only) continue;
    out.push_back(run_case(tc, campaign.scenario, s));
  }
  if (only && out.empty()) throw std::invalid_argument("no case with id '" + *only + "'");
  return out;
}

}  // namespace emrs::harness
