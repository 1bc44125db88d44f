#include <chrono>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "doctest.h"
#include "emrs/teleop/protocol.hpp"
#include "emrs/teleop/server.hpp"
#include "emrs/teleop/session.hpp"
#include "json.hpp"

using namespace emrs;
using namespace emrs::teleop;
namespace cc = client_command;
namespace beast = boost::beast;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

harness::ScenarioSet scenario() { return harness::load_scenario(harness::default_scenario_path()); }

bool is_malformed(const std::string& text) {
  try {
    decode_message(text);
  } catch (const MalformedMessage&) {
    return true;
  }
  return false;
}

TelemetryFrame random_frame(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1e4, 1e4);
  std::uniform_real_distribution<double> small(-1, 1);
  std::uniform_int_distribution<int> pick(0, 4);
  TelemetryFrame f;
  f.sequence = rng();
  f.timestamp_s = std::abs(u(rng));
  f.manager_state = static_cast<ManagerStateKind>(pick(rng) % 4);
  if (pick(rng) > 0) f.mode = static_cast<LocomotionMode>(pick(rng) % 4);
  f.commanded_twist = {small(rng), small(rng), small(rng)};
  f.actual_twist = {small(rng) * 1e-7, small(rng), small(rng)};
  for (auto& w : f.wheels) {
    w = {small(rng), small(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), std::abs(small(rng))};
  }
  f.true_pose = {u(rng), u(rng), small(rng) * 3, small(rng), small(rng)};
  f.tracked_pose = {u(rng), u(rng), small(rng) * 3, small(rng), small(rng)};
  if (pick(rng) == 0) f.fault = kAllFaultReasons[static_cast<std::size_t>(pick(rng))];
  if (pick(rng) > 1) f.last_command_time_s = std::abs(u(rng));
  const std::string pieces[] = {"ok", "quote \" here", "back\\slash", "tab\t", "line\nbreak", "\xc3\xa9t\xc3\xa9",
                                "\x01"};
  f.advisory = pieces[static_cast<std::size_t>(rng() % 7)];
  return f;
}

bool close_rel(double a, double b) { return std::abs(a - b) <= 1e-8 * std::max(1.0, std::abs(b)); }

void check_close(const TelemetryFrame& a, const TelemetryFrame& b) {
  CHECK(a.sequence == b.sequence);
  CHECK(a.manager_state == b.manager_state);
  CHECK(a.mode == b.mode);
  CHECK(a.fault == b.fault);
  CHECK(a.advisory == b.advisory);
  CHECK(a.last_command_time_s.has_value() == b.last_command_time_s.has_value());
  CHECK(close_rel(a.timestamp_s, b.timestamp_s));
  CHECK(close_rel(a.actual_twist.vx_mps, b.actual_twist.vx_mps));
  CHECK(close_rel(a.true_pose.x_m, b.true_pose.x_m));
  CHECK(close_rel(a.tracked_pose.yaw_rad, b.tracked_pose.yaw_rad));
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    CHECK(close_rel(a.wheels[i].speed_radps, b.wheels[i].speed_radps));
    CHECK(close_rel(a.wheels[i].slip_ratio, b.wheels[i].slip_ratio));
  }
}

std::vector<std::pair<ClientId, std::string>> replies_for(TeleopCore::Output& out, ClientId client) {
  std::vector<std::pair<ClientId, std::string>> r;
  for (auto& reply : out.replies) {
    if (reply.first == client) r.push_back(reply);
  }
  return r;
}

}  // namespace

TEST_CASE("decode examples") {
  auto m = decode_message(R"({"type":"speed","mode":"crab","v":0.1,"heading":0.2,"seq":7})");
  CHECK(m.seq == 7u);
  CHECK(m.command == ClientCommand{cc::Speed{CrabCommand<double>{0.1, 0.2}}});
  CHECK(decode_command(R"({"type":"speed","mode":"ackermann","v":0.1,"omega":0.05})") ==
        ClientCommand{cc::Speed{AckermannCommand<double>{0.1, 0.05}}});
  CHECK(decode_command(R"({"type":"speed","mode":"point_turn","omega":0.2})") ==
        ClientCommand{cc::Speed{PointTurnCommand<double>{0.2}}});
  CHECK(decode_command(R"({"type":"change_mode","mode":"skid"})") ==
        ClientCommand{cc::ChangeMode{LocomotionMode::SkidSteer}});
  CHECK(decode_command(R"({"type":"estop"})") == ClientCommand{cc::EStop{}});
  CHECK(decode_command(R"({"type":"reset"})") == ClientCommand{cc::Reset{}});
  CHECK(decode_command(R"({"type":"load_scenario","name":"spot"})") == ClientCommand{cc::LoadScenario{"spot"}});
  CHECK(decode_command(R"({"type":"set_tilt","angle_deg":25})") == ClientCommand{cc::SetTilt{25}});
}

TEST_CASE("malformed messages") {
  CHECK(is_malformed(R"({"type":"set_tilt","angle_deg":35})"));
  CHECK(is_malformed(R"({"type":"set_tilt","angle_deg":-1})"));
  CHECK(is_malformed("not json"));
  CHECK(is_malformed("[1,2]"));
  CHECK(is_malformed(R"({"type":"warp"})"));
  CHECK(is_malformed(R"({"type":"speed","mode":"hover","v":0.1})"));
  CHECK(is_malformed(R"({"type":"speed","mode":"crab","v":0.1})"));
  CHECK(is_malformed(R"({"type":"speed","mode":"crab","v":"fast","heading":0})"));
  CHECK(is_malformed(R"({"type":"estop","extra":1})"));
  CHECK(is_malformed(R"({"type":"estop","seq":-3})"));
}

TEST_CASE("commands round trip through the wire format") {
  const std::vector<ClientCommand> commands{cc::Speed{AckermannCommand<double>{0.1, -0.05}},
                                            cc::Speed{PointTurnCommand<double>{0.3}},
                                            cc::Speed{CrabCommand<double>{-0.2, 1.2}},
                                            cc::Speed{SkidCommand<double>{0.05, 0.1}},
                                            cc::ChangeMode{LocomotionMode::PointTurn},
                                            cc::EStop{},
                                            cc::Reset{},
                                            cc::LoadScenario{"pel"},
                                            cc::SetTilt{12.5}};
  std::uint64_t seq = 1;
  for (const auto& c : commands) {
    const auto msg = decode_message(encode_command(c, seq));
    CHECK(msg.command == c);
    CHECK(msg.seq == seq);
    ++seq;
  }
}

TEST_CASE("telemetry round trip fuzz") {
  std::mt19937_64 rng(2024);
  std::size_t largest = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto f = random_frame(rng);
    const auto text = encode_telemetry(f);
    largest = std::max(largest, text.size());
    REQUIRE(text.size() < kMaxTelemetryBytes);
    CHECK_NOTHROW(nlohmann::json::parse(text));
    const auto back = decode_telemetry(text);
    check_close(back, f);
    CHECK(encode_telemetry(back) == text);
  }
  MESSAGE("largest frame " << largest << " bytes");
}

TEST_CASE("telemetry field order is fixed") {
  const auto text = encode_telemetry(TelemetryFrame{});
  const char* keys[] = {"\"type\"",          "\"sequence\"", "\"timestamp_s\"",  "\"manager_state\"",
                        "\"mode\"",          "\"commanded_twist\"", "\"actual_twist\"", "\"wheels\"",
                        "\"true_pose\"",     "\"tracked_pose\"", "\"fault\"",        "\"last_command_time_s\"",
                        "\"advisory\""};
  std::size_t last = 0;
  for (const auto* k : keys) {
    const auto at = text.find(k);
    REQUIRE(at != std::string::npos);
    CHECK(at >= last);
    last = at;
  }
}

TEST_CASE("watchdog injects once per silence episode") {
  SessionWatchdog w(0.5, 20.0);
  CHECK_FALSE(w.tick(1.0, ManagerStateKind::Driving).inject_zero_speed);  // no operator yet
  w.on_command(1.0);
  int injected = 0;
  for (double t = 1.0; t < 4.0; t += 0.001) injected += w.tick(t, ManagerStateKind::Driving).inject_zero_speed;
  CHECK(injected == 1);
  w.on_command(4.0);
  CHECK_FALSE(w.tick(4.4, ManagerStateKind::Driving).inject_zero_speed);
  const auto a = w.tick(4.51, ManagerStateKind::Driving);
  CHECK(a.inject_zero_speed);
  REQUIRE(a.advisory);
  CHECK(a.advisory->find("CommandTimeout") != std::string::npos);

  SessionWatchdog idle(0.5, 20.0);
  idle.on_command(0.0);
  for (double t = 0; t < 3; t += 0.01) CHECK_FALSE(idle.tick(t, ManagerStateKind::Idle).inject_zero_speed);

  SessionWatchdog cadence(0.5, 20.0);
  int frames = 0;
  for (int k = 0; k < 1000; ++k) frames += session_tick(cadence, k * 0.001, ManagerStateKind::Idle).publish_telemetry;
  CHECK(frames == 20);
}

TEST_CASE("core stops a silent operator without faulting") {
  TeleopCore core(scenario(), "spot", 3);
  const auto c = core.connect();
  core.submit(c, {cc::ChangeMode{LocomotionMode::Crab}, 1});
  core.advance_to(0.5);
  core.submit(c, {cc::Speed{CrabCommand<double>{0.1, 0.0}}, 2});
  core.advance_to(0.8);
  CHECK(core.latest_frame().commanded_twist.vx_mps == doctest::Approx(0.1));
  core.advance_to(2.0);
  const auto f = core.latest_frame();
  CHECK(f.manager_state == ManagerStateKind::Driving);
  CHECK(f.commanded_twist.vx_mps == 0.0);
  CHECK(f.advisory.find("CommandTimeout") != std::string::npos);
  CHECK_FALSE(f.fault);
}

TEST_CASE("commands from two clients apply in receipt order") {
  TeleopCore core(scenario(), "spot", 3);
  const auto a = core.connect();
  const auto b = core.connect();
  CHECK(a != b);
  core.submit(a, {cc::ChangeMode{LocomotionMode::Crab}, 1});
  core.submit(b, {cc::ChangeMode{LocomotionMode::SkidSteer}, 1});
  core.submit(a, {cc::ChangeMode{LocomotionMode::Ackermann}, 2});
  auto out = core.advance_to(0.1);
  const auto log = core.applied_log();
  REQUIRE(log.size() == 3);
  CHECK(log[0].client == a);
  CHECK(log[1].client == b);
  CHECK(log[2].client == a);
  CHECK(log[2].seq == 2u);
  CHECK(replies_for(out, a).size() == 2);
  CHECK(replies_for(out, b).size() == 1);
  core.advance_to(10.0);
  CHECK(core.latest_frame().mode == LocomotionMode::Ackermann);
}

TEST_CASE("speed commands are not forwarded while in fault") {
  TeleopCore core(scenario(), "spot", 3);
  const auto c = core.connect();
  core.submit(c, {cc::ChangeMode{LocomotionMode::Crab}, 1});
  core.advance_to(0.5);
  core.submit(c, {cc::EStop{}, 2});
  core.submit(c, {cc::Speed{CrabCommand<double>{0.1, 0.0}}, 3});
  auto out = core.advance_to(1.0);
  const auto log = core.applied_log();
  REQUIRE(log.size() == 3);
  CHECK(log[2].type == "speed");
  CHECK_FALSE(log[2].forwarded);
  const auto reply = nlohmann::json::parse(out.replies.back().second);
  CHECK(reply["type"] == "error");
  CHECK(reply["seq"] == 3);
  CHECK(core.latest_frame().fault == FaultReason::EStop);
  for (const auto& w : core.latest_frame().wheels) CHECK(w.speed_setpoint_radps == 0.0);

  core.submit(c, {cc::Reset{}, 4});
  core.advance_to(1.5);
  CHECK(core.latest_frame().manager_state == ManagerStateKind::Idle);
}

TEST_CASE("scenario reload and tilt") {
  TeleopCore core(scenario(), "spot", 3);
  const auto c = core.connect();
  core.advance_to(1.0);
  core.submit(c, {cc::SetTilt{10}, 1});
  auto out = core.advance_to(1.1);
  CHECK(nlohmann::json::parse(out.replies[0].second)["type"] == "error");
  core.submit(c, {cc::LoadScenario{"pel"}, 2});
  core.submit(c, {cc::SetTilt{10}, 3});
  out = core.advance_to(1.2);
  CHECK(nlohmann::json::parse(out.replies[0].second)["type"] == "ack");
  CHECK(nlohmann::json::parse(out.replies[1].second)["type"] == "ack");
  CHECK(core.terrain_name() == "pel");
  CHECK(core.time_s() == doctest::Approx(1.2));
  core.submit(c, {cc::LoadScenario{"atlantis"}, 4});
  out = core.advance_to(1.3);
  CHECK(nlohmann::json::parse(out.replies[0].second)["type"] == "error");
  const auto health = nlohmann::json::parse(core.healthz_json());
  CHECK(health["status"] == "ok");
  CHECK(health["scenario"]["terrain"] == "pel");
}

TEST_CASE("live websocket session") {
  TeleopCore core(scenario(), "spot", 9);
  ServerOptions options;
  options.address = "127.0.0.1";
  options.port = 0;
  options.static_dir = std::filesystem::path(EMRS_DATA_DIR) / "www";
  TeleopServer server(core, options);
  const auto port = server.start();
  REQUIRE(port != 0);

  net::io_context ioc;
  tcp::resolver resolver(ioc);
  const auto endpoints = resolver.resolve("127.0.0.1", std::to_string(port));

  auto get = [&](const std::string& target) {
    beast::tcp_stream stream(ioc);
    stream.connect(endpoints);
    beast::http::request<beast::http::empty_body> req{beast::http::verb::get, target, 11};
    req.set(beast::http::field::host, "127.0.0.1");
    beast::http::write(stream, req);
    beast::flat_buffer buffer;
    beast::http::response<beast::http::string_body> res;
    beast::http::read(stream, buffer, res);
    return res;
  };
  const auto health = get("/healthz");
  CHECK(health.result() == beast::http::status::ok);
  CHECK(nlohmann::json::parse(health.body())["status"] == "ok");
  CHECK(get("/").result() == beast::http::status::ok);
  CHECK(get("/nothing-here").result() == beast::http::status::not_found);
  CHECK(get("/../CMakeLists.txt").result() != beast::http::status::ok);

  beast::websocket::stream<tcp::socket> ws(ioc);
  net::connect(ws.next_layer(), endpoints);
  ws.handshake("127.0.0.1", "/ws");
  ws.text(true);
  ws.write(net::buffer(encode_command(cc::ChangeMode{LocomotionMode::Crab}, 1)));
  ws.write(net::buffer(std::string("{\"type\":\"set_tilt\",\"angle_deg\":35}")));

  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto last = start;
  double worst_gap_ms = 0;
  int telemetry = 0;
  bool acked = false;
  bool error_seen = false;
  bool sent_speed = false;
  double max_speed = 0;
  while (clock::now() - start < std::chrono::milliseconds(2000)) {
    beast::flat_buffer buffer;
    ws.read(buffer);
    const auto text = beast::buffers_to_string(buffer.data());
    const auto j = nlohmann::json::parse(text);
    if (j["type"] == "telemetry") {
      const auto now = clock::now();
      if (telemetry > 0) {
        worst_gap_ms = std::max(worst_gap_ms, std::chrono::duration<double, std::milli>(now - last).count());
      }
      last = now;
      ++telemetry;
      CHECK(text.size() < kMaxTelemetryBytes);
      const auto frame = decode_telemetry(text);
      max_speed = std::max(max_speed, frame.commanded_twist.vx_mps);
      if (!sent_speed && frame.manager_state == ManagerStateKind::Driving) {
        ws.write(net::buffer(encode_command(cc::Speed{CrabCommand<double>{0.1, 0.0}}, 2)));
        sent_speed = true;
      }
    } else if (j["type"] == "ack") {
      acked = true;
    } else if (j["type"] == "error") {
      error_seen = true;
    }
  }
  ws.close(beast::websocket::close_code::normal);
  server.stop();

  MESSAGE(telemetry << " frames, worst gap " << worst_gap_ms << " ms");
  CHECK(telemetry >= 30);
  CHECK(worst_gap_ms <= 75.0);
  CHECK(acked);
  CHECK(error_seen);
  CHECK(sent_speed);
  CHECK(max_speed == doctest::Approx(0.1));
}
