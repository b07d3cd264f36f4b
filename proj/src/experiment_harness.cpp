#include "ofdmrsma/experiment_harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

#include "ofdmrsma/reference_oracle.hpp"

namespace ofdmrsma {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    out.push_back(trim(item));
  }
  return out;
}

// Compact float rendering shared by CSV and manifest output.
std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

double parse_double(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config field '" + key +
                                "': not a number: " + value);
  }
}

long long parse_int(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config field '" + key +
                                "': not an integer: " + value);
  }
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("config field '" + key +
                              "': expected true/false: " + value);
}

std::string to_string(FadingKind kind) {
  switch (kind) {
    case FadingKind::flat: return "flat";
    case FadingKind::frequency_selective: return "frequency_selective";
    case FadingKind::doubly_selective: return "doubly_selective";
  }
  return "?";
}

FadingKind fading_from_string(const std::string& name) {
  if (name == "flat") return FadingKind::flat;
  if (name == "frequency_selective") return FadingKind::frequency_selective;
  if (name == "doubly_selective") return FadingKind::doubly_selective;
  throw std::invalid_argument("config field 'channel.kind': unknown kind: " +
                              name);
}

std::uint64_t derive_subseed(std::uint64_t seed, int realization, int user) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(realization),
                    static_cast<std::uint32_t>(user)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[1]) << 32) | words[0];
}

std::vector<CouplingMatrix> build_couplings(const ScenarioConfig& cfg,
                                            const UnitaryDft& dft,
                                            const CpMatrices& cp,
                                            int realization) {
  std::vector<CouplingMatrix> couplings;
  couplings.reserve(cfg.num_users);
  const double weak_scale = std::pow(10.0, cfg.weak_user_gain_db / 20.0);
  for (int user = 0; user < cfg.num_users; ++user) {
    std::vector<PropagationPath> paths;
    if (cfg.deterministic_unit_channel) {
      paths = {PropagationPath{Complex(1.0, 0.0), 0, 0.0}};
    } else {
      paths = sample_paths(cfg.channel, cfg.ofdm,
                           derive_subseed(cfg.seed, realization, user));
    }
    if (user == 0 && cfg.num_users > 1) {
      for (auto& path : paths) path.gain *= weak_scale;
    }
    const LtvChannel ch = build_time_channel(paths, cfg.ofdm);
    couplings.push_back(effective_coupling(ch, cfg.ofdm, dft, cp, user));
  }
  return couplings;
}

double run_scheme(std::span<const CouplingMatrix> couplings, MaScheme scheme,
                  const OptimizerOptions& opts) {
  switch (scheme) {
    case MaScheme::rsma:
      return optimize_rsma(couplings, opts).report.sum_rate;
    case MaScheme::noma:
      return optimize_noma(couplings, opts, default_sic_order(couplings))
          .report.sum_rate;
    case MaScheme::ofdma_waterfill:
      return waterfill_ofdma(
                 couplings,
                 assign_subcarriers_ofdma(couplings, OfdmaAssignMode::best_gain),
                 opts)
          .report.sum_rate;
    case MaScheme::ofdma_equal:
      return waterfill_ofdma(couplings,
                             assign_subcarriers_ofdma(
                                 couplings, OfdmaAssignMode::equal_split),
                             opts)
          .report.sum_rate;
    case MaScheme::single_user_ofdm: {
      // Whole band to the user with the largest total diagonal gain.
      const auto order = default_sic_order(couplings);
      const int strongest = order.back();
      const std::vector<int> assignment(couplings[0].g.rows(), strongest);
      return waterfill_ofdma(couplings, assignment, opts).report.sum_rate;
    }
  }
  throw std::logic_error("run_scheme: unreachable");
}

OptimizerOptions options_for(const ScenarioConfig& cfg, double snr_db) {
  OptimizerOptions opts = cfg.optimizer;
  opts.noise_var = 1.0;
  opts.power_budget =
      cfg.ofdm.n_subcarriers * std::pow(10.0, snr_db / 10.0);
  return opts;
}

void write_manifest(const ScenarioConfig& cfg,
                    const std::filesystem::path& output,
                    const std::vector<double>& delta_values) {
  const std::string canonical = serialize_scenario_config(cfg);
  std::filesystem::path manifest_path = output;
  manifest_path.replace_extension(".manifest");
  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write manifest: " +
                             manifest_path.string());
  }
  out << "config_hash = sha1:" << git_blob_sha1(canonical) << "\n";
  out << "snr_definition = " << kSnrDefinition << "\n";
  if (!delta_values.empty()) {
    out << "sweep.delta_d =";
    for (double v : delta_values) out << " " << fmt(v);
    out << "\n";
  }
  out << canonical;
}

void write_csv(const std::vector<ResultRow>& rows,
               const std::filesystem::path& output) {
  std::ofstream out(output, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write output: " + output.string());
  }
  out << kCsvHeader << "\n";
  for (const auto& row : rows) {
    out << row.scheme << "," << fmt(row.snr_db) << "," << fmt(row.delta_d)
        << "," << fmt(row.mean_sum_rate) << "," << fmt(row.std_sum_rate) << ","
        << row.realizations << "\n";
  }
}

std::vector<ResultRow> collect_rows(const ScenarioConfig& cfg) {
  cfg.validate();
  const UnitaryDft dft = build_dft_matrix(cfg.ofdm.n_subcarriers);
  const CpMatrices cp =
      build_cp_matrices(cfg.ofdm.n_subcarriers, cfg.ofdm.cp_len);

  // samples[scheme index][snr index] in realization order
  std::vector<std::vector<std::vector<double>>> samples(
      cfg.schemes.size(),
      std::vector<std::vector<double>>(cfg.snr_grid_db.size()));
  for (int r = 0; r < cfg.realizations; ++r) {
    const auto couplings = build_couplings(cfg, dft, cp, r);
    for (std::size_t si = 0; si < cfg.snr_grid_db.size(); ++si) {
      const OptimizerOptions opts = options_for(cfg, cfg.snr_grid_db[si]);
      for (std::size_t sch = 0; sch < cfg.schemes.size(); ++sch) {
        samples[sch][si].push_back(
            run_scheme(couplings, cfg.schemes[sch], opts));
      }
    }
  }

  std::vector<ResultRow> rows;
  for (std::size_t sch = 0; sch < cfg.schemes.size(); ++sch) {
    for (std::size_t si = 0; si < cfg.snr_grid_db.size(); ++si) {
      const auto& v = samples[sch][si];
      ResultRow row;
      row.scheme = to_string(cfg.schemes[sch]);
      row.snr_db = cfg.snr_grid_db[si];
      row.delta_d = cfg.channel.delta_d;
      row.realizations = static_cast<int>(v.size());
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      row.mean_sum_rate = mean;
      row.std_sum_rate =
          v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1))
                       : 0.0;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace

std::string to_string(MaScheme s) {
  switch (s) {
    case MaScheme::ofdma_equal: return "ofdma_equal";
    case MaScheme::ofdma_waterfill: return "ofdma_waterfill";
    case MaScheme::noma: return "noma";
    case MaScheme::rsma: return "rsma";
    case MaScheme::single_user_ofdm: return "single_user_ofdm";
  }
  return "?";
}

MaScheme ma_scheme_from_string(const std::string& name) {
  if (name == "ofdma_equal") return MaScheme::ofdma_equal;
  if (name == "ofdma_waterfill") return MaScheme::ofdma_waterfill;
  if (name == "noma") return MaScheme::noma;
  if (name == "rsma") return MaScheme::rsma;
  if (name == "single_user_ofdm") return MaScheme::single_user_ofdm;
  throw std::invalid_argument("config field 'schemes': unknown scheme: " +
                              name);
}

void ScenarioConfig::validate() const {
  ofdm.validate();
  channel.validate();
  optimizer.validate();
  if (schemes.empty()) {
    throw std::invalid_argument("config field 'schemes': none selected");
  }
  if (snr_grid_db.empty()) {
    throw std::invalid_argument("config field 'snr_grid_db': empty");
  }
  for (std::size_t i = 1; i < snr_grid_db.size(); ++i) {
    if (snr_grid_db[i] <= snr_grid_db[i - 1]) {
      throw std::invalid_argument(
          "config field 'snr_grid_db': must be strictly increasing");
    }
  }
  if (realizations < 1) {
    throw std::invalid_argument("config field 'realizations': must be >= 1");
  }
  if (num_users < 1) {
    throw std::invalid_argument("config field 'num_users': must be >= 1");
  }
}

std::vector<double> scheme_sum_rates(const ScenarioConfig& cfg, MaScheme scheme,
                                     double snr_db) {
  ScenarioConfig probe = cfg;
  probe.schemes = {scheme};
  probe.snr_grid_db = {snr_db};
  probe.validate();
  const UnitaryDft dft = build_dft_matrix(cfg.ofdm.n_subcarriers);
  const CpMatrices cp =
      build_cp_matrices(cfg.ofdm.n_subcarriers, cfg.ofdm.cp_len);
  const OptimizerOptions opts = options_for(cfg, snr_db);
  std::vector<double> rates;
  rates.reserve(cfg.realizations);
  for (int r = 0; r < cfg.realizations; ++r) {
    const auto couplings = build_couplings(cfg, dft, cp, r);
    rates.push_back(run_scheme(couplings, scheme, opts));
  }
  return rates;
}

std::vector<ResultRow> run_scenario(const ScenarioConfig& cfg,
                                    const std::filesystem::path& output) {
  std::vector<ResultRow> rows = collect_rows(cfg);
  write_csv(rows, output);
  write_manifest(cfg, output, {});
  return rows;
}

std::vector<ResultRow> run_delta_sweep(const ScenarioConfig& base,
                                       const std::vector<double>& delta_values,
                                       const std::filesystem::path& output) {
  if (delta_values.empty()) {
    throw std::invalid_argument("sweep: no delta_d values given");
  }
  std::vector<ResultRow> all;
  for (double delta : delta_values) {
    ScenarioConfig cfg = base;
    cfg.channel.kind = FadingKind::doubly_selective;
    cfg.channel.delta_d = delta;
    auto rows = collect_rows(cfg);
    all.insert(all.end(), rows.begin(), rows.end());
  }
  write_csv(all, output);
  write_manifest(base, output, delta_values);
  return all;
}

ScenarioConfig parse_scenario_config(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  ScenarioConfig cfg;
  int n = cfg.ofdm.n_subcarriers;
  int c = cfg.ofdm.cp_len;
  double scs = cfg.ofdm.scs_hz;

  auto take = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) return std::optional<std::string>();
    std::optional<std::string> v = it->second;
    kv.erase(it);
    return v;
  };

  if (auto v = take("ofdm.n_subcarriers")) n = static_cast<int>(parse_int(*v, "ofdm.n_subcarriers"));
  if (auto v = take("ofdm.cp_len")) c = static_cast<int>(parse_int(*v, "ofdm.cp_len"));
  if (auto v = take("ofdm.scs_hz")) scs = parse_double(*v, "ofdm.scs_hz");
  try {
    cfg.ofdm = OfdmConfig::make(n, c, scs);
    if (auto v = take("ofdm.fs_hz")) {
      // Derived field, accepted so canonical output reparses; must agree.
      cfg.ofdm.fs_hz = parse_double(*v, "ofdm.fs_hz");
      cfg.ofdm.validate();
    }
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("config field 'ofdm.*': ") +
                                e.what());
  }

  if (auto v = take("channel.kind")) cfg.channel.kind = fading_from_string(*v);
  if (auto v = take("channel.num_taps")) {
    cfg.channel.num_taps = static_cast<int>(parse_int(*v, "channel.num_taps"));
  } else if (cfg.channel.kind == FadingKind::flat) {
    cfg.channel.num_taps = 1;
  } else {
    cfg.channel.num_taps = 8;
  }
  if (auto v = take("channel.pdp_decay")) {
    cfg.channel.pdp_decay = parse_double(*v, "channel.pdp_decay");
  }
  if (auto v = take("channel.delta_d")) {
    cfg.channel.delta_d = parse_double(*v, "channel.delta_d");
  }

  if (auto v = take("schemes")) {
    cfg.schemes.clear();
    for (const auto& name : split(*v, ',')) {
      if (!name.empty()) cfg.schemes.push_back(ma_scheme_from_string(name));
    }
  }
  if (auto v = take("snr_grid_db")) {
    cfg.snr_grid_db.clear();
    for (const auto& s : split(*v, ',')) {
      if (!s.empty()) cfg.snr_grid_db.push_back(parse_double(s, "snr_grid_db"));
    }
  }
  if (auto v = take("realizations")) {
    cfg.realizations = static_cast<int>(parse_int(*v, "realizations"));
  }
  if (auto v = take("seed")) {
    cfg.seed = static_cast<std::uint64_t>(parse_int(*v, "seed"));
  }
  if (auto v = take("num_users")) {
    cfg.num_users = static_cast<int>(parse_int(*v, "num_users"));
  }
  if (auto v = take("weak_user_gain_db")) {
    cfg.weak_user_gain_db = parse_double(*v, "weak_user_gain_db");
  }
  if (auto v = take("deterministic_unit_channel")) {
    cfg.deterministic_unit_channel =
        parse_bool(*v, "deterministic_unit_channel");
  }
  if (auto v = take("optimizer.max_iters")) {
    cfg.optimizer.max_iters =
        static_cast<int>(parse_int(*v, "optimizer.max_iters"));
  }
  if (auto v = take("optimizer.rel_tol")) {
    cfg.optimizer.rel_tol = parse_double(*v, "optimizer.rel_tol");
  }
  if (auto v = take("optimizer.num_starts")) {
    cfg.optimizer.num_starts =
        static_cast<int>(parse_int(*v, "optimizer.num_starts"));
  }
  if (auto v = take("optimizer.seed")) {
    cfg.optimizer.seed =
        static_cast<std::uint64_t>(parse_int(*v, "optimizer.seed"));
  }
  if (auto v = take("optimizer.min_rates")) {
    const auto items = split(*v, ',');
    cfg.optimizer.min_rates.resize(static_cast<int>(items.size()));
    for (std::size_t i = 0; i < items.size(); ++i) {
      cfg.optimizer.min_rates[static_cast<int>(i)] =
          parse_double(items[i], "optimizer.min_rates");
    }
  }

  if (!kv.empty()) {
    throw std::invalid_argument("config field '" + kv.begin()->first +
                                "': unknown key");
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig parse_scenario_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open config file: " + path.string());
  }
  return parse_scenario_config(in);
}

std::string serialize_scenario_config(const ScenarioConfig& cfg) {
  std::ostringstream out;
  out << "ofdm.n_subcarriers = " << cfg.ofdm.n_subcarriers << "\n";
  out << "ofdm.cp_len = " << cfg.ofdm.cp_len << "\n";
  out << "ofdm.scs_hz = " << fmt(cfg.ofdm.scs_hz) << "\n";
  out << "ofdm.fs_hz = " << fmt(cfg.ofdm.fs_hz) << "\n";
  out << "channel.kind = " << to_string(cfg.channel.kind) << "\n";
  out << "channel.num_taps = " << cfg.channel.num_taps << "\n";
  out << "channel.pdp_decay = " << fmt(cfg.channel.pdp_decay) << "\n";
  out << "channel.delta_d = " << fmt(cfg.channel.delta_d) << "\n";
  out << "schemes = ";
  for (std::size_t i = 0; i < cfg.schemes.size(); ++i) {
    out << (i ? "," : "") << to_string(cfg.schemes[i]);
  }
  out << "\n";
  out << "snr_grid_db = ";
  for (std::size_t i = 0; i < cfg.snr_grid_db.size(); ++i) {
    out << (i ? "," : "") << fmt(cfg.snr_grid_db[i]);
  }
  out << "\n";
  out << "realizations = " << cfg.realizations << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "num_users = " << cfg.num_users << "\n";
  out << "weak_user_gain_db = " << fmt(cfg.weak_user_gain_db) << "\n";
  out << "deterministic_unit_channel = "
      << (cfg.deterministic_unit_channel ? "true" : "false") << "\n";
  out << "optimizer.max_iters = " << cfg.optimizer.max_iters << "\n";
  out << "optimizer.rel_tol = " << fmt(cfg.optimizer.rel_tol) << "\n";
  out << "optimizer.num_starts = " << cfg.optimizer.num_starts << "\n";
  out << "optimizer.seed = " << cfg.optimizer.seed << "\n";
  out << "optimizer.min_rates = ";
  for (int i = 0; i < cfg.optimizer.min_rates.size(); ++i) {
    out << (i ? "," : "") << fmt(cfg.optimizer.min_rates[i]);
  }
  out << "\n";
  return out.str();
}

std::string git_blob_sha1(const std::string& content) {
  std::string blob = "blob " + std::to_string(content.size());
  blob.push_back('\0');
  blob += content;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(),
                 nullptr) != 1) {
    throw std::runtime_error("sha1 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

bool decompositions_match(const SinrDecomposition& a,
                          const SinrDecomposition& b, double tol) {
  return std::abs(a.signal - b.signal) <= tol &&
         std::abs(a.ici - b.ici) <= tol && std::abs(a.mui - b.mui) <= tol &&
         std::abs(a.noise - b.noise) <= tol;
}

std::vector<CheckResult> verify_checks() {
  std::vector<CheckResult> results;
  auto record = [&](const std::string& name, bool ok,
                    const std::string& detail) {
    results.push_back({name, ok, detail});
  };

  // Structural: CP round trip and DFT unitarity.
  {
    bool ok = true;
    for (auto [n, c] : {std::pair{4, 0}, {4, 2}, {8, 3}, {35, 9}}) {
      const CpMatrices cp = build_cp_matrices(n, c);
      ok = ok && (cp.remove * cp.add - RMatrix::Identity(n, n)).norm() == 0.0;
    }
    record("cp_round_trip", ok, "B*A = I exactly");
  }
  {
    double worst = 0.0;
    for (int n : {1, 2, 8, 16, 35}) {
      const UnitaryDft dft = build_dft_matrix(n);
      worst = std::max(worst, (dft.matrix * dft.matrix.adjoint() -
                               CMatrix::Identity(n, n))
                                  .norm());
    }
    record("dft_unitarity", worst < 1e-12, "worst |F F^H - I| = " + fmt(worst));
  }

  // Zero-Doppler coupling matrices are diagonal.
  {
    const OfdmConfig cfg = OfdmConfig::make(16, 4, 60e3);
    const UnitaryDft dft = build_dft_matrix(16);
    const CpMatrices cp = build_cp_matrices(16, 4);
    ChannelScenario scn;
    scn.kind = FadingKind::frequency_selective;
    scn.num_taps = 5;
    double worst = 0.0;
    for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
      const auto paths = sample_paths(scn, cfg, seed);
      const auto g =
          effective_coupling(build_time_channel(paths, cfg), cfg, dft, cp, 0);
      CMatrix off = g.g;
      off.diagonal().setZero();
      worst = std::max(worst, off.cwiseAbs().maxCoeff());
    }
    record("zero_doppler_diagonal", worst < 1e-10,
           "worst off-diagonal = " + fmt(worst));
  }

  // Matrix-path decompositions equal the loop-based oracle.
  {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 2.0);
    double worst = 0.0;
    for (int instance = 0; instance < 100; ++instance) {
      const int n = 2 + static_cast<int>(rng() % 3);
      const int k_users = 1 + static_cast<int>(rng() % 2);
      std::vector<CouplingMatrix> couplings(k_users);
      for (int k = 0; k < k_users; ++k) {
        couplings[k].user_id = k;
        couplings[k].g.resize(n, n);
        for (int r = 0; r < n; ++r) {
          for (int col = 0; col < n; ++col) {
            couplings[k].g(r, col) = Complex(normal(rng), normal(rng));
          }
        }
      }
      PowerAllocation alloc = PowerAllocation::zeros(k_users, n);
      for (int i = 0; i < n; ++i) alloc.common[i] = unif(rng);
      for (int k = 0; k < k_users; ++k) {
        for (int i = 0; i < n; ++i) alloc.private_powers(k, i) = unif(rng);
      }
      std::vector<int> order(k_users);
      for (int k = 0; k < k_users; ++k) order[k] = k_users - 1 - k;
      const double noise = 0.3 + unif(rng);
      for (int k = 0; k < k_users; ++k) {
        for (int sc = 0; sc < n; ++sc) {
          const auto diff = [&](const SinrDecomposition& x,
                                const SinrDecomposition& y) {
            return std::max({std::abs(x.signal - y.signal),
                             std::abs(x.ici - y.ici), std::abs(x.mui - y.mui),
                             std::abs(x.noise - y.noise)});
          };
          worst = std::max(
              worst,
              diff(rsma_common_sinr(couplings, alloc, noise, k, sc),
                   loop_power_decomposition(couplings, alloc,
                                            StreamKind::rsma_common, {}, noise,
                                            k, sc)));
          worst = std::max(
              worst,
              diff(rsma_private_sinr(couplings, alloc, noise, k, sc),
                   loop_power_decomposition(couplings, alloc,
                                            StreamKind::rsma_private, {},
                                            noise, k, sc)));
          worst = std::max(
              worst,
              diff(noma_private_sinr(couplings, alloc.private_powers, noise,
                                     order, k, sc),
                   loop_power_decomposition(couplings, alloc,
                                            StreamKind::noma_private, order,
                                            noise, k, sc)));
        }
      }
    }
    record("decomposition_oracle", worst < 1e-10,
           "worst |matrix - loop| = " + fmt(worst));
  }

  // WMMSE against the exhaustive grid on a bundled tiny instance.
  {
    const OfdmConfig cfg = OfdmConfig::make(2, 1, 60e3);
    const UnitaryDft dft = build_dft_matrix(2);
    const CpMatrices cp = build_cp_matrices(2, 1);
    ChannelScenario scn;
    scn.kind = FadingKind::doubly_selective;
    scn.num_taps = 2;
    scn.delta_d = 0.3;
    std::vector<CouplingMatrix> couplings;
    for (int user = 0; user < 2; ++user) {
      const auto paths = sample_paths(scn, cfg, 77 + user);
      couplings.push_back(
          effective_coupling(build_time_channel(paths, cfg), cfg, dft, cp,
                             user));
    }
    OptimizerOptions opts;
    opts.power_budget = 8.0;
    opts.noise_var = 1.0;
    GridSpec grid;
    grid.total_power = opts.power_budget;

    bool ok = true;
    std::string detail;
    for (auto scheme : {OracleScheme::rsma, OracleScheme::noma}) {
      const auto best = grid_search_best(couplings, scheme, grid, 1.0);
      const double wmmse =
          scheme == OracleScheme::rsma
              ? optimize_rsma(couplings, opts).report.sum_rate
              : optimize_noma(couplings, opts,
                              default_sic_order(couplings))
                    .report.sum_rate;
      const double ratio = wmmse / best.sum_rate;
      ok = ok && ratio >= 0.97;
      detail += (scheme == OracleScheme::rsma ? "rsma " : " noma ") +
                fmt(ratio);
    }
    record("wmmse_vs_grid", ok, "ratios:" + detail);
  }

  return results;
}

}  // namespace ofdmrsma
