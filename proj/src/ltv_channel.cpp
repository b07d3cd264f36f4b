#include "ofdmrsma/ltv_channel.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace ofdmrsma {

void ChannelScenario::validate() const {
  if (num_taps < 1) {
    throw std::invalid_argument("ChannelScenario: num_taps must be >= 1");
  }
  if (kind == FadingKind::flat && num_taps != 1) {
    throw std::invalid_argument("ChannelScenario: flat fading has one tap");
  }
  if (kind != FadingKind::doubly_selective && delta_d != 0.0) {
    throw std::invalid_argument(
        "ChannelScenario: delta_d must be 0 unless doubly_selective");
  }
  if (delta_d < 0.0) {
    throw std::invalid_argument("ChannelScenario: delta_d must be >= 0");
  }
  if (pdp_decay < 0.0) {
    throw std::invalid_argument("ChannelScenario: pdp_decay must be >= 0");
  }
}

LtvChannel build_time_channel(const std::vector<PropagationPath>& paths,
                              const OfdmConfig& cfg) {
  cfg.validate();
  const int m = cfg.symbol_len();
  LtvChannel ch;
  ch.paths = paths;
  ch.h_time = CMatrix::Zero(m, m);
  for (const auto& path : paths) {
    if (path.delay_samples < 0 || path.delay_samples > cfg.cp_len) {
      throw std::invalid_argument(
          "build_time_channel: path delay exceeds the CP length");
    }
    // Pi^d * Delta(nu): row r picks column (r - d) mod m of the Doppler
    // diagonal, whose phase ramp is indexed 1..N+C.
    for (int r = 0; r < m; ++r) {
      const int col = ((r - path.delay_samples) % m + m) % m;
      const double phase =
          2.0 * std::numbers::pi * path.doppler_hz * (col + 1) / cfg.fs_hz;
      ch.h_time(r, col) +=
          path.gain * Complex(std::cos(phase), std::sin(phase));
    }
  }
  return ch;
}

CouplingMatrix effective_coupling(const LtvChannel& ch, const OfdmConfig& cfg,
                                  const UnitaryDft& dft, const CpMatrices& cp,
                                  int user_id) {
  const int n = cfg.n_subcarriers;
  const int m = cfg.symbol_len();
  if (dft.matrix.rows() != n || ch.h_time.rows() != m ||
      cp.add.rows() != m || cp.remove.cols() != m) {
    throw std::invalid_argument("effective_coupling: dimension mismatch");
  }
  CouplingMatrix out;
  out.user_id = user_id;
  out.g = dft.matrix * cp.remove.cast<Complex>() * ch.h_time *
          cp.add.cast<Complex>() * dft.matrix.adjoint();
  return out;
}

std::vector<PropagationPath> sample_paths(const ChannelScenario& scn,
                                          const OfdmConfig& cfg,
                                          std::uint64_t seed) {
  scn.validate();
  cfg.validate();
  if (scn.num_taps > cfg.cp_len + 1) {
    throw std::invalid_argument(
        "sample_paths: num_taps exceeds cp_len + 1, delays would break the "
        "ISI-free assumption");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0,
                                                 2.0 * std::numbers::pi);

  const int taps = scn.kind == FadingKind::flat ? 1 : scn.num_taps;

  // Exponential power-delay profile normalized to unit total power.
  RVector profile(taps);
  for (int l = 0; l < taps; ++l) {
    profile[l] = std::exp(-scn.pdp_decay * l);
  }
  profile /= profile.sum();
  if (scn.kind == FadingKind::flat) {
    profile[0] = 1.0;
  }

  std::vector<PropagationPath> paths(taps);
  for (int l = 0; l < taps; ++l) {
    const double sigma = std::sqrt(profile[l] / 2.0);
    paths[l].gain = Complex(sigma * normal(rng), sigma * normal(rng));
    paths[l].delay_samples = l;
    paths[l].doppler_hz = 0.0;
  }
  if (scn.kind == FadingKind::doubly_selective) {
    const double f_d = scn.delta_d * cfg.scs_hz;
    for (int l = 0; l < taps; ++l) {
      paths[l].doppler_hz = f_d * std::cos(uniform(rng));
    }
  }
  return paths;
}

}  // namespace ofdmrsma
