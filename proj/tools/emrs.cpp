#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "emrs/harness/runner.hpp"
#include "emrs/teleop/server.hpp"

#ifndef EMRS_DATA_DIR
#define EMRS_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace emrs;

namespace {

int run(const fs::path& campaign_path, const fs::path& out_dir, std::optional<std::uint64_t> seed,
        const std::optional<std::string>& only) {
  const auto campaign = harness::load_campaign(campaign_path);
  const std::uint64_t s = seed.value_or(campaign.seed);
  const auto results = harness::run_campaign(campaign, s, only);
  harness::emit_reports(campaign.name, s, results, out_dir);
  bool ok = true;
  for (const auto& r : results) {
    const auto& rep = r.report;
    std::printf("%-24s %-14s", rep.id.c_str(), std::string(to_string(rep.result.verdict)).c_str());
    for (const auto& why : rep.result.reasons) std::printf(" %s;", why.c_str());
    std::printf("\n");
    ok &= rep.acceptable();
  }
  std::printf("%zu cases, reports in %s\n", results.size(), out_dir.string().c_str());
  return ok ? 0 : 1;
}

int validate(const fs::path& path) {
  try {
    const auto campaign = harness::load_campaign(path);
    std::printf("ok: campaign '%s', %zu cases\n", campaign.name.c_str(), campaign.cases.size());
    return 0;
  } catch (const harness::ConfigError& e) {
    if (e.location() != "schema") throw;
  }
  const auto scenario = harness::load_scenario(path);
  std::printf("ok: scenario, %zu terrains\n", scenario.terrains.size());
  return 0;
}

int serve(unsigned short port, const fs::path& scenario_path, std::optional<std::uint64_t> seed,
          const std::string& terrain, const fs::path& static_dir) {
  auto scenario = harness::load_scenario(scenario_path);
  teleop::TeleopCore core(scenario, terrain, seed.value_or(scenario.rng_seed));
  teleop::TeleopServer server(core, {"0.0.0.0", port, static_dir, 1.0});
  const auto bound = server.start();
  std::printf("emrs teleop on port %u (terrain %s); ws://localhost:%u/ws\n", bound, terrain.c_str(), bound);
  std::fflush(stdout);
  server.wait();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EMRS rover locomotion stack: campaign runner and teleoperation server"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "Run a test campaign and write reports");
  fs::path campaign_path;
  fs::path out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> only;
  run_cmd->add_option("--campaign", campaign_path, "Campaign file")->required();
  run_cmd->add_option("--out", out_dir, "Report directory")->required();
  run_cmd->add_option("--seed", seed, "Override the campaign seed");
  run_cmd->add_option("--case", only, "Run a single case by id");

  auto* validate_cmd = app.add_subcommand("validate", "Validate a campaign or scenario file");
  fs::path validate_path;
  validate_cmd->add_option("file", validate_path, "File to validate")->required();

  auto* serve_cmd = app.add_subcommand("serve", "Serve the teleoperation WebSocket API");
  unsigned short port = 8080;
  fs::path scenario_path = harness::default_scenario_path();
  std::string terrain = "pel";
  fs::path static_dir = fs::path(EMRS_DATA_DIR) / "www";
  serve_cmd->add_option("--port", port, "TCP port (0 picks a free port)");
  serve_cmd->add_option("--scenario", scenario_path, "Scenario file");
  serve_cmd->add_option("--seed", seed, "Override the scenario seed");
  serve_cmd->add_option("--terrain", terrain, "Initial terrain");
  serve_cmd->add_option("--static", static_dir, "Directory served at /");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return run(campaign_path, out_dir, seed, only);
    if (*validate_cmd) return validate(validate_path);
    if (*serve_cmd) return serve(port, scenario_path, seed, terrain, static_dir);
  } catch (const harness::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
