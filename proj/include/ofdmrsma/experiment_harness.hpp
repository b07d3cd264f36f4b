#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ofdmrsma/allocation_optimizers.hpp"
#include "ofdmrsma/ltv_channel.hpp"
#include "ofdmrsma/ofdm_frame.hpp"

namespace ofdmrsma {

enum class MaScheme { ofdma_equal, ofdma_waterfill, noma, rsma, single_user_ofdm };

std::string to_string(MaScheme s);
MaScheme ma_scheme_from_string(const std::string& name);

/// One Monte-Carlo experiment: a seeded SNR sweep of the selected multiple
/// access schemes over a channel family.
struct ScenarioConfig {
  OfdmConfig ofdm = OfdmConfig::make(35, 9, 60e3);
  ChannelScenario channel;
  std::vector<MaScheme> schemes;
  std::vector<double> snr_grid_db;
  int realizations = 50;
  std::uint64_t seed = 1;
  OptimizerOptions optimizer;
  int num_users = 2;
  double weak_user_gain_db = -6.0;  ///< user 0 gain scale relative to user 1
  bool deterministic_unit_channel = false;  ///< single unit-gain path, no RNG

  void validate() const;  ///< throws std::invalid_argument naming the field
};

struct ResultRow {
  std::string scheme;
  double snr_db = 0.0;
  double delta_d = 0.0;
  double mean_sum_rate = 0.0;
  double std_sum_rate = 0.0;
  int realizations = 0;
};

inline constexpr const char* kCsvHeader =
    "scheme,snr_db,delta_d,mean_sum_rate,std_sum_rate,realizations";

inline constexpr const char* kSnrDefinition =
    "SNR_dB = 10*log10(P_t / (N * sigma^2)) with sigma^2 = 1";

/// Runs the scenario and writes the CSV plus a `<output>.manifest` key-value
/// file recording every parameter, the SNR definition and a git-style blob
/// hash of the canonical config. Byte-identical across reruns.
std::vector<ResultRow> run_scenario(const ScenarioConfig& cfg,
                                    const std::filesystem::path& output);

/// Same scenario repeated over several normalized-Doppler values, all rows in
/// one CSV.
std::vector<ResultRow> run_delta_sweep(const ScenarioConfig& base,
                                       const std::vector<double>& delta_values,
                                       const std::filesystem::path& output);

/// Per-realization sum rates without file output (used by run_scenario and
/// by tests that need raw samples).
std::vector<double> scheme_sum_rates(const ScenarioConfig& cfg, MaScheme scheme,
                                     double snr_db);

ScenarioConfig parse_scenario_config(std::istream& in);
ScenarioConfig parse_scenario_config_file(const std::filesystem::path& path);

/// Canonical flat key-value rendering; input of the manifest hash.
std::string serialize_scenario_config(const ScenarioConfig& cfg);

/// SHA-1 of "blob <len>\0<content>", hex encoded (same scheme git uses).
std::string git_blob_sha1(const std::string& content);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Built-in oracle-equivalence and invariant checks on tiny instances; the
/// `verify` CLI subcommand prints them as a table.
std::vector<CheckResult> verify_checks();

/// Field-by-field comparison used by the verify suite.
bool decompositions_match(const SinrDecomposition& a,
                          const SinrDecomposition& b, double tol);

}  // namespace ofdmrsma
