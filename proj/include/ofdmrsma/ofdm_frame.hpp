#pragma once

#include "ofdmrsma/linalg.hpp"

namespace ofdmrsma {

/// OFDM numerology. All matrix dimensions in the library derive from it.
struct OfdmConfig {
  int n_subcarriers = 0;   ///< N
  int cp_len = 0;          ///< C, cyclic prefix length in samples
  double scs_hz = 0.0;     ///< subcarrier spacing
  double fs_hz = 0.0;      ///< sampling rate, equals N * scs_hz

  static OfdmConfig make(int n_subcarriers, int cp_len, double scs_hz);

  int symbol_len() const { return n_subcarriers + cp_len; }

  /// Throws std::invalid_argument unless N >= 1, 0 <= C < N and fs = N * scs.
  void validate() const;
};

/// N-point DFT matrix with 1/sqrt(N) normalization so F * F^H = I.
struct UnitaryDft {
  CMatrix matrix;
};

/// CP addition matrix A ((N+C) x N) and removal matrix B (N x (N+C)).
/// A copies the last C samples to the front, B drops the first C samples,
/// so B * A = I_N exactly.
struct CpMatrices {
  RMatrix add;
  RMatrix remove;
};

UnitaryDft build_dft_matrix(int n);

CpMatrices build_cp_matrices(int n, int c);

/// Time-domain OFDM symbol A * F^H * diag(amplitudes) * symbols.
/// Amplitudes are nonnegative real; the power loaded on subcarrier n is
/// amplitudes[n]^2.
CVector modulate_stream(const OfdmConfig& cfg, const RVector& amplitudes,
                        const CVector& symbols);

}  // namespace ofdmrsma
