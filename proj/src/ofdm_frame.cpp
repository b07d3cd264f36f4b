#include "ofdmrsma/ofdm_frame.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ofdmrsma {

OfdmConfig OfdmConfig::make(int n_subcarriers, int cp_len, double scs_hz) {
  OfdmConfig cfg;
  cfg.n_subcarriers = n_subcarriers;
  cfg.cp_len = cp_len;
  cfg.scs_hz = scs_hz;
  cfg.fs_hz = n_subcarriers * scs_hz;
  cfg.validate();
  return cfg;
}

void OfdmConfig::validate() const {
  if (n_subcarriers < 1) {
    throw std::invalid_argument("OfdmConfig: n_subcarriers must be >= 1");
  }
  if (cp_len < 0 || cp_len >= n_subcarriers) {
    throw std::invalid_argument("OfdmConfig: need 0 <= cp_len < n_subcarriers");
  }
  if (scs_hz <= 0.0) {
    throw std::invalid_argument("OfdmConfig: scs_hz must be positive");
  }
  const double expected_fs = n_subcarriers * scs_hz;
  if (std::abs(fs_hz - expected_fs) > 1e-6 * expected_fs) {
    throw std::invalid_argument("OfdmConfig: fs_hz must equal N * scs_hz");
  }
}

UnitaryDft build_dft_matrix(int n) {
  if (n < 1) {
    throw std::invalid_argument("build_dft_matrix: n must be >= 1");
  }
  UnitaryDft dft;
  dft.matrix.resize(n, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int m = 0; m < n; ++m) {
    for (int k = 0; k < n; ++k) {
      const double phase =
          -2.0 * std::numbers::pi * static_cast<double>(m) * k / n;
      dft.matrix(m, k) = scale * Complex(std::cos(phase), std::sin(phase));
    }
  }
  return dft;
}

CpMatrices build_cp_matrices(int n, int c) {
  if (n < 1 || c < 0 || c >= n) {
    throw std::invalid_argument("build_cp_matrices: need 0 <= c < n");
  }
  CpMatrices cp;
  cp.add = RMatrix::Zero(n + c, n);
  for (int i = 0; i < c; ++i) {
    cp.add(i, n - c + i) = 1.0;  // copy of the tail
  }
  for (int i = 0; i < n; ++i) {
    cp.add(c + i, i) = 1.0;
  }
  cp.remove = RMatrix::Zero(n, n + c);
  for (int i = 0; i < n; ++i) {
    cp.remove(i, c + i) = 1.0;
  }
  return cp;
}

CVector modulate_stream(const OfdmConfig& cfg, const RVector& amplitudes,
                        const CVector& symbols) {
  const int n = cfg.n_subcarriers;
  if (amplitudes.size() != n || symbols.size() != n) {
    throw std::invalid_argument("modulate_stream: vector length != N");
  }
  const UnitaryDft dft = build_dft_matrix(n);
  const CpMatrices cp = build_cp_matrices(n, cfg.cp_len);
  const CVector loaded = amplitudes.cast<Complex>().cwiseProduct(symbols);
  const CVector time = dft.matrix.adjoint() * loaded;
  return cp.add.cast<Complex>() * time;
}

}  // namespace ofdmrsma
