#include "emrs/teleop/session.hpp"

#include <numbers>

#include "json.hpp"

namespace emrs::teleop {

namespace mc = manager_command;
namespace cc = client_command;

void SessionWatchdog::on_command(double now_s) {
  last_command_s_ = now_s;
  fired_ = false;
}

WatchdogActions SessionWatchdog::tick(double now_s, ManagerStateKind state) {
  WatchdogActions a;
  if (state == ManagerStateKind::Driving && last_command_s_ && !fired_ && now_s - *last_command_s_ > timeout_s_) {
    fired_ = true;
    a.inject_zero_speed = true;
    a.advisory = "CommandTimeout: operator silent, zero speed injected";
  }
  if (now_s + 1e-9 >= static_cast<double>(telemetry_index_) * telemetry_period_s_) {
    a.publish_telemetry = true;
    while (static_cast<double>(telemetry_index_) * telemetry_period_s_ <= now_s + 1e-9) ++telemetry_index_;
  }
  return a;
}

TeleopCore::TeleopCore(harness::ScenarioSet scenario, std::string terrain, std::uint64_t seed)
    : scenario_(std::move(scenario)),
      seed_(seed),
      watchdog_(scenario_.safety.command_timeout_s, scenario_.sim.rates.telemetry_hz) {
  load(terrain);
}

void TeleopCore::load(const std::string& terrain) {
  const auto& t = scenario_.terrain(terrain);
  if (loop_) epoch_s_ += loop_->time_s();
  const Pose2p5 start{t.heightmap.size_x_m() / 2, t.heightmap.size_y_m() / 2, 0, 0, 0};
  loop_ = std::make_unique<harness::RoverLoop>(scenario_, t, start, sim::SplitRng(seed_).split("teleop/" + terrain));
  loop_->set_deadman(false);
  terrain_ = terrain;
}

ClientId TeleopCore::connect() {
  std::lock_guard lock(queue_mutex_);
  return next_client_++;
}

void TeleopCore::submit(ClientId client, ClientMessage message) {
  std::lock_guard lock(queue_mutex_);
  queue_.emplace_back(client, std::move(message));
}

double TeleopCore::time_s() const {
  std::lock_guard lock(state_mutex_);
  return epoch_s_ + loop_->time_s();
}

std::string TeleopCore::terrain_name() const {
  std::lock_guard lock(state_mutex_);
  return terrain_;
}

std::vector<AppliedCommand> TeleopCore::applied_log() const {
  std::lock_guard lock(state_mutex_);
  return log_;
}

TelemetryFrame TeleopCore::latest_frame() const {
  std::lock_guard lock(state_mutex_);
  return latest_;
}

std::string TeleopCore::healthz_json() const {
  std::lock_guard lock(state_mutex_);
  nlohmann::ordered_json j;
  j["status"] = "ok";
  j["build"] = {{"name", "emrs"}, {"version", EMRS_VERSION}, {"compiler", __VERSION__}};
  j["scenario"] = {{"file", scenario_.source.string()}, {"terrain", terrain_}, {"seed", seed_}};
  j["sim_time_s"] = epoch_s_ + loop_->time_s();
  return j.dump();
}

TelemetryFrame TeleopCore::frame() const {
  TelemetryFrame f = loop_->snapshot();
  f.sequence = sequence_;
  f.timestamp_s = epoch_s_ + loop_->time_s();
  if (const auto t = watchdog_.last_command_s()) f.last_command_time_s = *t;
  f.advisory = advisory_;
  return f;
}

void TeleopCore::apply(ClientId client, const ClientMessage& message, Output& out) {
  const double now = loop_->time_s();
  const auto& cmd = message.command;
  bool forwarded = false;
  std::optional<std::string> error;

  std::visit(
      [&]<typename T>(const T& c) {
        if constexpr (std::is_same_v<T, cc::Speed>) {
          if (loop_->manager().state_kind() == ManagerStateKind::Fault) {
            error = "speed command dropped: rover is in fault";
            return;
          }
          forwarded = true;
          if (const auto r = loop_->command(mc::Speed{c.motion}).rejection) error = *r;
        } else if constexpr (std::is_same_v<T, cc::ChangeMode>) {
          forwarded = true;
          if (const auto r = loop_->command(mc::ChangeMode{c.mode}).rejection) error = *r;
        } else if constexpr (std::is_same_v<T, cc::EStop>) {
          forwarded = true;
          loop_->command(mc::EStop{});
        } else if constexpr (std::is_same_v<T, cc::Reset>) {
          forwarded = true;
          if (const auto r = loop_->command(mc::Reset{}).rejection) error = *r;
        } else if constexpr (std::is_same_v<T, cc::LoadScenario>) {
          if (!scenario_.terrains.contains(c.name)) {
            error = "unknown scenario '" + c.name + "'";
            return;
          }
          load(c.name);
        } else if constexpr (std::is_same_v<T, cc::SetTilt>) {
          if (!loop_->world().terrain().tilt_bed) {
            error = "terrain '" + terrain_ + "' has no tilt bed";
            return;
          }
          loop_->world().set_tilt(c.angle_deg * std::numbers::pi / 180.0);
        }
      },
      cmd);

  watchdog_.on_command(epoch_s_ + loop_->time_s());
  last_commander_ = client;
  advisory_ = "last command from client " + std::to_string(client);
  log_.push_back({client, message.seq, std::string(type_name(cmd)), epoch_s_ + now, forwarded});
  out.replies.emplace_back(client, error ? encode_error(*error, message.seq) : encode_ack(cmd, message.seq));
}

TeleopCore::Output TeleopCore::advance_to(double time_s) {
  std::deque<std::pair<ClientId, ClientMessage>> pending;
  {
    std::lock_guard lock(queue_mutex_);
    pending.swap(queue_);
  }
  Output out;
  std::lock_guard lock(state_mutex_);
  for (const auto& [client, message] : pending) apply(client, message, out);

  const double dt = scenario_.sim.rates.physics_dt();
  while (epoch_s_ + loop_->time_s() + dt <= time_s + 1e-9) {
    loop_->step();
    const double now = epoch_s_ + loop_->time_s();
    const auto actions = watchdog_.tick(now, loop_->manager().state_kind());
    if (actions.inject_zero_speed) {
      if (const auto mode = loop_->manager().mode()) loop_->command(mc::Speed{zero_command(*mode)}, false);
      advisory_ = *actions.advisory;
    }
    if (actions.publish_telemetry) {
      ++sequence_;
      latest_ = frame();
      out.telemetry.push_back(encode_telemetry(latest_));
    }
  }
  return out;
}

}  // namespace emrs::teleop
