#pragma once

#include <cstdint>
#include <vector>

#include "ofdmrsma/linalg.hpp"
#include "ofdmrsma/ofdm_frame.hpp"

namespace ofdmrsma {

/// One discrete propagation path of a linear time-varying channel.
struct PropagationPath {
  Complex gain;            ///< complex attenuation
  int delay_samples = 0;   ///< integer delay on the sample grid
  double doppler_hz = 0.0; ///< Doppler frequency shift
};

/// Time-domain LTV channel matrix over one CP-extended OFDM symbol,
/// H = sum_l gain_l * Pi^{delay_l} * Delta(doppler_l).
struct LtvChannel {
  std::vector<PropagationPath> paths;
  CMatrix h_time;  ///< (N+C) x (N+C)
};

/// Effective frequency-domain coupling G = F * B * H * A * F^H for one user.
/// Entry (n, j) is the gain from subcarrier j into subcarrier n; with zero
/// Doppler the matrix is diagonal.
struct CouplingMatrix {
  CMatrix g;
  int user_id = 0;
};

enum class FadingKind { flat, frequency_selective, doubly_selective };

/// Random channel family used by the experiments.
struct ChannelScenario {
  FadingKind kind = FadingKind::flat;
  int num_taps = 1;         ///< L, taps at delays 0 .. L-1
  double pdp_decay = 0.5;   ///< exponential power-delay-profile decay
  double delta_d = 0.0;     ///< normalized Doppler f_d / scs

  /// Throws std::invalid_argument if delta_d != 0 outside doubly_selective,
  /// or num_taps != 1 for flat fading.
  void validate() const;
};

/// Synthesizes the time-domain channel matrix. Rejects delays beyond the CP
/// length (the model assumes ISI-free transmission).
LtvChannel build_time_channel(const std::vector<PropagationPath>& paths,
                              const OfdmConfig& cfg);

CouplingMatrix effective_coupling(const LtvChannel& ch, const OfdmConfig& cfg,
                                  const UnitaryDft& dft, const CpMatrices& cp,
                                  int user_id);

/// Draws one random path set for the scenario. Deterministic per seed.
///  - flat: one path, gain ~ CN(0,1), no delay, no Doppler.
///  - frequency_selective: num_taps paths at delays 0..L-1, exponential PDP
///    normalized to unit total power, no Doppler.
///  - doubly_selective: same gains/delays plus per-path Doppler
///    f_d * cos(theta_l), theta_l uniform on [0, 2pi), f_d = delta_d * scs.
std::vector<PropagationPath> sample_paths(const ChannelScenario& scn,
                                          const OfdmConfig& cfg,
                                          std::uint64_t seed);

}  // namespace ofdmrsma
