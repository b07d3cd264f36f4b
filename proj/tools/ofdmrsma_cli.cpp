#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ofdmrsma/experiment_harness.hpp"

namespace {

constexpr int kExitInvalidConfig = 1;
constexpr int kExitRuntimeFailure = 2;

constexpr const char* kConfigSchema = R"(Scenario config: flat `key = value` text, `#` comments.

  ofdm.n_subcarriers           int, default 35
  ofdm.cp_len                  int, default 9
  ofdm.scs_hz                  Hz, default 60000 (sampling rate is N*scs)
  channel.kind                 flat | frequency_selective | doubly_selective
  channel.num_taps             int, default 1 (flat) / 8 (selective)
  channel.pdp_decay            exponential profile decay, default 0.5
  channel.delta_d              normalized Doppler f_d/scs, default 0
  schemes                      comma list of ofdma_equal, ofdma_waterfill,
                               noma, rsma, single_user_ofdm
  snr_grid_db                  comma list, strictly increasing
  realizations                 int, default 50
  seed                         integer, drives per-realization channels
  num_users                    int, default 2
  weak_user_gain_db            user-0 gain offset, default -6
  deterministic_unit_channel   true/false, fixed unit-gain channel (testing)
  optimizer.max_iters          default 200
  optimizer.rel_tol            default 1e-4
  optimizer.num_starts         default 4
  optimizer.seed               default 1 (random multi-start points)
  optimizer.min_rates          comma list of per-user minimum rates

Output: CSV `scheme,snr_db,delta_d,mean_sum_rate,std_sum_rate,realizations`
plus a `.manifest` file recording every parameter, the SNR definition
(P_t = N * sigma^2 * 10^(SNR/10), sigma^2 = 1) and the config content hash.)";

int run_command(const std::string& config_path, const std::string& output,
                long long seed_override, int realizations_override) {
  ofdmrsma::ScenarioConfig cfg;
  try {
    cfg = ofdmrsma::parse_scenario_config_file(config_path);
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    if (realizations_override > 0) cfg.realizations = realizations_override;
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
  try {
    const auto rows = ofdmrsma::run_scenario(cfg, output);
    std::cout << "wrote " << rows.size() << " rows to " << output << "\n";
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kExitRuntimeFailure;
  }
  return 0;
}

int sweep_command(const std::string& config_path, const std::string& output,
                  const std::string& param, std::vector<double> values) {
  if (param != "delta_d") {
    std::cerr << "invalid config: sweep supports --param delta_d only\n";
    return kExitInvalidConfig;
  }
  ofdmrsma::ScenarioConfig cfg;
  try {
    cfg = ofdmrsma::parse_scenario_config_file(config_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
  try {
    const auto rows = ofdmrsma::run_delta_sweep(cfg, values, output);
    std::cout << "wrote " << rows.size() << " rows to " << output << "\n";
  } catch (const std::exception& e) {
    std::cerr << "sweep failed: " << e.what() << "\n";
    return kExitRuntimeFailure;
  }
  return 0;
}

int verify_command() {
  bool all_ok = true;
  std::vector<ofdmrsma::CheckResult> checks;
  try {
    checks = ofdmrsma::verify_checks();
  } catch (const std::exception& e) {
    std::cerr << "verify crashed: " << e.what() << "\n";
    return kExitRuntimeFailure;
  }
  std::printf("%-28s %-6s %s\n", "check", "status", "detail");
  for (const auto& check : checks) {
    std::printf("%-28s %-6s %s\n", check.name.c_str(),
                check.passed ? "pass" : "FAIL", check.detail.c_str());
    all_ok = all_ok && check.passed;
  }
  return all_ok ? 0 : kExitRuntimeFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OFDM-RSMA link-level simulator and experiment harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output;
  long long seed_override = -1;
  int realizations_override = 0;

  auto* run = app.add_subcommand("run", "Run one scenario and write CSV");
  run->footer(kConfigSchema);
  run->add_option("--config", config_path, "Scenario config file")->required();
  run->add_option("--output", output, "CSV output path")->required();
  run->add_option("--seed", seed_override, "Override the scenario seed");
  run->add_option("--realizations", realizations_override,
                  "Override the realization count");

  std::string sweep_param = "delta_d";
  std::vector<double> sweep_values;
  auto* sweep = app.add_subcommand(
      "sweep", "Repeat a scenario over several normalized-Doppler values");
  sweep->add_option("--config", config_path, "Scenario config file")
      ->required();
  sweep->add_option("--output", output, "CSV output path")->required();
  sweep->add_option("--param", sweep_param, "Swept parameter (delta_d)");
  sweep->add_option("--values", sweep_values, "Values of the swept parameter")
      ->required()
      ->delimiter(',');

  auto* verify = app.add_subcommand(
      "verify", "Run the built-in oracle and invariant checks");
  (void)verify;

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand("run")) {
    return run_command(config_path, output, seed_override,
                       realizations_override);
  }
  if (app.got_subcommand("sweep")) {
    return sweep_command(config_path, output, sweep_param, sweep_values);
  }
  return verify_command();
}
