#include "emrs/teleop/protocol.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "json.hpp"

namespace emrs::teleop {

using nlohmann::json;

std::string_view type_name(const ClientCommand& cmd) {
  static constexpr std::string_view names[] = {"speed", "change_mode", "estop", "reset", "load_scenario", "set_tilt"};
  return names[cmd.index()];
}

std::optional<LocomotionMode> parse_mode(std::string_view text) {
  for (const auto m : kAllModes) {
    if (to_string(m) == text) return m;
  }
  return std::nullopt;
}

namespace {

[[noreturn]] void malformed(const std::string& what) { throw MalformedMessage(what); }

class Object {
 public:
  explicit Object(const json& j) : j_(j) {
    if (!j_.is_object()) malformed("expected a JSON object");
  }

  double number(const char* key) {
    const json& v = take(key);
    if (!v.is_number()) malformed(std::string("field '") + key + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) malformed(std::string("field '") + key + "' must be finite");
    return d;
  }

  std::string string(const char* key) {
    const json& v = take(key);
    if (!v.is_string()) malformed(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
  }

  std::optional<std::uint64_t> sequence() {
    if (!j_.contains("seq")) return std::nullopt;
    const json& v = take("seq");
    if (!v.is_number_unsigned()) malformed("field 'seq' must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.contains(key)) malformed("unknown field '" + key + "'");
    }
  }

 private:
  const json& take(const char* key) {
    if (!j_.contains(key)) malformed(std::string("missing field '") + key + "'");
    seen_.insert(key);
    return j_.at(key);
  }

  const json& j_;
  std::set<std::string> seen_;
};

BodyMotionCommand read_motion(Object& o, LocomotionMode mode) {
  switch (mode) {
    case LocomotionMode::Ackermann: {
      const double v = o.number("v");
      return AckermannCommand<double>{v, o.number("omega")};
    }
    case LocomotionMode::PointTurn: return PointTurnCommand<double>{o.number("omega")};
    case LocomotionMode::Crab: {
      const double v = o.number("v");
      return CrabCommand<double>{v, o.number("heading")};
    }
    case LocomotionMode::SkidSteer: {
      const double v = o.number("v");
      return SkidCommand<double>{v, o.number("omega")};
    }
  }
  malformed("unknown mode");
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string json_string(std::string_view s) { return json(std::string(s)).dump(); }

void twist(std::string& out, const char* key, const BodyTwist& t) {
  out += '"';
  out += key;
  out += "\":{\"vx_mps\":" + num(t.vx_mps) + ",\"vy_mps\":" + num(t.vy_mps) + ",\"omega_radps\":" +
         num(t.omega_radps) + '}';
}

void pose(std::string& out, const char* key, const Pose2p5& p) {
  out += '"';
  out += key;
  out += "\":{\"x_m\":" + num(p.x_m) + ",\"y_m\":" + num(p.y_m) + ",\"yaw_rad\":" + num(p.yaw_rad) +
         ",\"pitch_rad\":" + num(p.pitch_rad) + ",\"roll_rad\":" + num(p.roll_rad) + '}';
}

BodyTwist read_twist(const json& j) {
  return {j.at("vx_mps").get<double>(), j.at("vy_mps").get<double>(), j.at("omega_radps").get<double>()};
}

Pose2p5 read_pose(const json& j) {
  return {j.at("x_m").get<double>(), j.at("y_m").get<double>(), j.at("yaw_rad").get<double>(),
          j.at("pitch_rad").get<double>(), j.at("roll_rad").get<double>()};
}

}  // namespace

ClientMessage decode_message(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    malformed(std::string("invalid JSON: ") + e.what());
  }
  Object o(j);
  ClientMessage msg{client_command::EStop{}, o.sequence()};
  const std::string type = o.string("type");
  if (type == "speed") {
    const std::string mode_text = o.string("mode");
    const auto mode = parse_mode(mode_text);
    if (!mode) malformed("unknown mode '" + mode_text + "'");
    msg.command = client_command::Speed{read_motion(o, *mode)};
  } else if (type == "change_mode") {
    const std::string mode_text = o.string("mode");
    const auto mode = parse_mode(mode_text);
    if (!mode) malformed("unknown mode '" + mode_text + "'");
    msg.command = client_command::ChangeMode{*mode};
  } else if (type == "estop") {
    msg.command = client_command::EStop{};
  } else if (type == "reset") {
    msg.command = client_command::Reset{};
  } else if (type == "load_scenario") {
    msg.command = client_command::LoadScenario{o.string("name")};
  } else if (type == "set_tilt") {
    const double angle = o.number("angle_deg");
    if (angle < 0 || angle > kMaxTiltDeg) malformed("angle_deg must lie in [0, 30]");
    msg.command = client_command::SetTilt{angle};
  } else {
    malformed("unknown message type '" + type + "'");
  }
  o.finish();
  return msg;
}

ClientCommand decode_command(const std::string& text) { return decode_message(text).command; }

std::string encode_command(const ClientCommand& cmd, std::optional<std::uint64_t> seq) {
  json j;
  j["type"] = std::string(type_name(cmd));
  std::visit(
      [&]<typename T>(const T& c) {
        if constexpr (std::is_same_v<T, client_command::Speed>) {
          j["mode"] = std::string(to_string(mode_of(c.motion)));
          std::visit(
              [&]<typename M>(const M& m) {
                if constexpr (requires { m.v_mps; }) j["v"] = m.v_mps;
                if constexpr (requires { m.omega_radps; }) j["omega"] = m.omega_radps;
                if constexpr (requires { m.heading_rad; }) j["heading"] = m.heading_rad;
              },
              c.motion);
        } else if constexpr (std::is_same_v<T, client_command::ChangeMode>) {
          j["mode"] = std::string(to_string(c.mode));
        } else if constexpr (std::is_same_v<T, client_command::LoadScenario>) {
          j["name"] = c.name;
        } else if constexpr (std::is_same_v<T, client_command::SetTilt>) {
          j["angle_deg"] = c.angle_deg;
        }
      },
      cmd);
  if (seq) j["seq"] = *seq;
  return j.dump();
}

std::string encode_telemetry(const TelemetryFrame& f) {
  std::string out;
  out.reserve(1800);
  out += "{\"type\":\"telemetry\",\"sequence\":" + std::to_string(f.sequence) + ",\"timestamp_s\":" +
         num(f.timestamp_s) + ",\"manager_state\":" + json_string(to_string(f.manager_state)) + ",\"mode\":" +
         (f.mode ? json_string(to_string(*f.mode)) : std::string("null")) + ',';
  twist(out, "commanded_twist", f.commanded_twist);
  out += ',';
  twist(out, "actual_twist", f.actual_twist);
  out += ",\"wheels\":[";
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    const auto& w = f.wheels[i];
    if (i) out += ',';
    out += "{\"steering_setpoint_rad\":" + num(w.steering_setpoint_rad) + ",\"steering_angle_rad\":" +
           num(w.steering_angle_rad) + ",\"speed_setpoint_radps\":" + num(w.speed_setpoint_radps) +
           ",\"speed_radps\":" + num(w.speed_radps) + ",\"drive_current_a\":" + num(w.drive_current_a) +
           ",\"drive_temp_c\":" + num(w.drive_temp_c) + ",\"steer_current_a\":" + num(w.steer_current_a) +
           ",\"steer_temp_c\":" + num(w.steer_temp_c) + ",\"slip_ratio\":" + num(w.slip_ratio) + '}';
  }
  out += "],";
  pose(out, "true_pose", f.true_pose);
  out += ',';
  pose(out, "tracked_pose", f.tracked_pose);
  out += ",\"fault\":" + (f.fault ? json_string(to_string(*f.fault)) : std::string("null"));
  out += ",\"last_command_time_s\":" + (f.last_command_time_s ? num(*f.last_command_time_s) : std::string("null"));
  out += ",\"advisory\":" + json_string(f.advisory) + '}';
  return out;
}

TelemetryFrame decode_telemetry(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("type") != "telemetry") malformed("not a telemetry frame");
    TelemetryFrame f;
    f.sequence = j.at("sequence").get<std::uint64_t>();
    f.timestamp_s = j.at("timestamp_s").get<double>();
    const auto state = j.at("manager_state").get<std::string>();
    bool known = false;
    for (const auto k : {ManagerStateKind::Idle, ManagerStateKind::Driving, ManagerStateKind::Reconfiguring,
                         ManagerStateKind::Fault}) {
      if (to_string(k) == state) {
        f.manager_state = k;
        known = true;
      }
    }
    if (!known) malformed("unknown manager state '" + state + "'");
    if (!j.at("mode").is_null()) {
      f.mode = parse_mode(j.at("mode").get<std::string>());
      if (!f.mode) malformed("unknown mode");
    }
    f.commanded_twist = read_twist(j.at("commanded_twist"));
    f.actual_twist = read_twist(j.at("actual_twist"));
    const auto& wheels = j.at("wheels");
    if (wheels.size() != kWheelCount) malformed("expected four wheels");
    for (std::size_t i = 0; i < kWheelCount; ++i) {
      const auto& w = wheels[i];
      auto& o = f.wheels[i];
      o.steering_setpoint_rad = w.at("steering_setpoint_rad").get<double>();
      o.steering_angle_rad = w.at("steering_angle_rad").get<double>();
      o.speed_setpoint_radps = w.at("speed_setpoint_radps").get<double>();
      o.speed_radps = w.at("speed_radps").get<double>();
      o.drive_current_a = w.at("drive_current_a").get<double>();
      o.drive_temp_c = w.at("drive_temp_c").get<double>();
      o.steer_current_a = w.at("steer_current_a").get<double>();
      o.steer_temp_c = w.at("steer_temp_c").get<double>();
      o.slip_ratio = w.at("slip_ratio").get<double>();
    }
    f.true_pose = read_pose(j.at("true_pose"));
    f.tracked_pose = read_pose(j.at("tracked_pose"));
    if (!j.at("fault").is_null()) {
      f.fault = parse_fault_reason(j.at("fault").get<std::string>());
      if (!f.fault) malformed("unknown fault reason");
    }
    if (!j.at("last_command_time_s").is_null()) f.last_command_time_s = j.at("last_command_time_s").get<double>();
    f.advisory = j.at("advisory").get<std::string>();
    return f;
  } catch (const json::exception& e) {
    malformed(std::string("invalid telemetry: ") + e.what());
  }
}

std::string encode_error(const std::string& message, std::optional<std::uint64_t> seq) {
  json j;
  j["type"] = "error";
  j["message"] = message;
  if (seq) j["seq"] = *seq;
  return j.dump();
}

std::string encode_ack(const ClientCommand& cmd, std::optional<std::uint64_t> seq) {
  json j;
  j["type"] = "ack";
  j["command"] = std::string(type_name(cmd));
  if (seq) j["seq"] = *seq;
  return j.dump();
}

}  // namespace emrs::teleop
