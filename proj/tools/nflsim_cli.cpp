// nflsim: run federated-learning simulations with run-time NFL detection and
// recovery, compare run artifacts, list scenario presets.

#include <chrono>
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"

#include "nflsim/artifact.hpp"
#include "nflsim/config.hpp"
#include "nflsim/errors.hpp"
#include "nflsim/simulation.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& preset_name,
                const std::optional<std::uint64_t>& seed,
                const std::string& mode, const std::string& out_dir, int workers) {
  nflsim::SimConfig config;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw nflsim::ConfigError("cannot open config file '" + config_path + "'");
    nlohmann::json j = nlohmann::json::parse(in);
    if (!preset_name.empty() && !j.contains("preset")) j["preset"] = preset_name;
    config = nflsim::config_from_json(j);
  } else if (!preset_name.empty()) {
    config = nflsim::preset(preset_name);
  } else {
    config = nflsim::config_from_json(nlohmann::json::object());
  }
  if (seed) config.seed = *seed;
  if (!mode.empty()) config.mode = nflsim::mode_from_string(mode);
  config.validate();

  const auto start = std::chrono::steady_clock::now();
  nflsim::ArtifactWriter writer(out_dir, config);
  nflsim::RunArtifact run = nflsim::run_simulation(config, workers, writer.observer());
  writer.finish(run);
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start).count();

  int reports = 0;
  for (const nflsim::Event& e : run.events) reports += e.type == "nfl_report";
  std::cout << "mode=" << nflsim::to_string(config.mode) << " seed=" << config.seed
            << " rounds=" << config.rounds << " nfl_reports=" << reports << "\n";
  std::cout << nflsim::summary_csv(run.summary);
  std::printf("wrote %s in %.1fs\n", out_dir.c_str(), secs);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated learning simulator with run-time NFL detection and recovery"};
  app.require_subcommand(1);

  std::string config_path, preset_name, mode, out_dir = "run_out";
  std::optional<std::uint64_t> seed;
  int workers = 1;
  auto* run = app.add_subcommand("run", "Run one simulation and write its artifact");
  run->add_option("--config", config_path, "JSON config file");
  run->add_option("--preset", preset_name, "Scenario preset (see `presets list`)");
  run->add_option("--seed", seed, "Master seed");
  run->add_option("--mode", mode, "fedavg | detect_recover | all_time | short_term");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--workers", workers, "Client worker threads")->check(CLI::PositiveNumber);

  std::string dir_a, dir_b;
  auto* compare = app.add_subcommand("compare", "Compare two run artifacts");
  compare->add_option("dirA", dir_a)->required();
  compare->add_option("dirB", dir_b)->required();

  auto* presets = app.add_subcommand("presets", "Preset operations");
  auto* list = presets->add_subcommand("list", "List scenario presets");
  presets->require_subcommand(1);

  auto* dump = app.add_subcommand("config", "Print the resolved config as JSON");
  std::string dump_preset;
  dump->add_option("--preset", dump_preset, "Preset to print");
  std::string dump_config;
  dump->add_option("--config", dump_config, "Config file to resolve");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      return run_command(config_path, preset_name, seed, mode, out_dir, workers);
    }
    if (*compare) {
      const auto report =
          nflsim::compare_runs(nflsim::load_run(dir_a), nflsim::load_run(dir_b));
      std::cout << nflsim::format_compare(report);
      return 0;
    }
    if (*list) {
      for (const std::string& name : nflsim::preset_names()) std::cout << name << "\n";
      return 0;
    }
    if (*dump) {
      nflsim::SimConfig c = !dump_config.empty() ? nflsim::load_config(dump_config)
                             : !dump_preset.empty() ? nflsim::preset(dump_preset)
                             : nflsim::config_from_json(nlohmann::json::object());
      std::cout << nflsim::to_json(c).dump(2) << "\n";
      return 0;
    }
  } catch (const nflsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
