#pragma once

#include <span>
#include <vector>

#include "ofdmrsma/linalg.hpp"
#include "ofdmrsma/ltv_channel.hpp"

namespace ofdmrsma {

/// Per-subcarrier transmit powers of all streams plus the per-user shares of
/// the common rate. Powers are squared amplitudes (q = p^2).
struct PowerAllocation {
  RVector common;          ///< length N, common-stream power per subcarrier
  RMatrix private_powers;  ///< K x N, private-stream power per user/subcarrier
  RVector common_shares;   ///< length K, per-user share of the common rate

  static PowerAllocation zeros(int num_users, int n_subcarriers);

  int num_users() const { return static_cast<int>(private_powers.rows()); }
  int num_subcarriers() const { return static_cast<int>(common.size()); }
  double total_power() const { return common.sum() + private_powers.sum(); }
  bool within_budget(double power_budget, double tol = 1e-9) const;
};

/// Received-power split at one decoding stage: intended signal, inter-carrier
/// leakage of the same stream, other-stream interference, noise.
struct SinrDecomposition {
  double signal = 0.0;
  double ici = 0.0;
  double mui = 0.0;
  double noise = 0.0;

  double total() const { return signal + ici + mui + noise; }
  double sinr() const { return signal / (ici + mui + noise); }
};

struct RateReport {
  RMatrix common_rate_per_user;  ///< K x N, rate of the common stream at user k
  RMatrix private_rate;          ///< K x N
  double common_total = 0.0;     ///< min over users of their common-stream sum
  double sum_rate = 0.0;         ///< common_total + sum of private rates
};

/// Common-stream stage at user `user`, subcarrier `subcarrier`: nothing is
/// cancelled yet, so every private stream of every user interferes on all
/// subcarriers.
SinrDecomposition rsma_common_sinr(std::span<const CouplingMatrix> couplings,
                                   const PowerAllocation& alloc,
                                   double noise_var, int user, int subcarrier);

/// Private-stream stage with the common stream already removed; interference
/// is own-stream leakage from other subcarriers plus all other users' private
/// streams.
SinrDecomposition rsma_private_sinr(std::span<const CouplingMatrix> couplings,
                                    const PowerAllocation& alloc,
                                    double noise_var, int user, int subcarrier);

/// NOMA stage for `user` under a fixed successive-cancellation order
/// (sic_order[pos] = user decoded at position pos, held for the whole OFDM
/// symbol). Users decoded earlier are removed; later users interfere in full.
SinrDecomposition noma_private_sinr(std::span<const CouplingMatrix> couplings,
                                    const RMatrix& q_noma, double noise_var,
                                    const std::vector<int>& sic_order, int user,
                                    int subcarrier);

double rate_from_sinr(const SinrDecomposition& d);

RateReport evaluate_rsma(std::span<const CouplingMatrix> couplings,
                         const PowerAllocation& alloc, double noise_var);

RateReport evaluate_noma(std::span<const CouplingMatrix> couplings,
                         const RMatrix& q_noma, double noise_var,
                         const std::vector<int>& sic_order);

/// OFDMA with one owner per subcarrier and no cancellation anywhere: all
/// off-carrier energy, the owner's own included, is interference.
RateReport evaluate_ofdma(std::span<const CouplingMatrix> couplings,
                          const std::vector<int>& assignment, const RVector& q,
                          double noise_var);

/// True when sic_order is a permutation of 0..K-1.
bool is_permutation(const std::vector<int>& sic_order, int num_users);

/// True when the common-rate shares are nonnegative and their total fits
/// inside the report's decodable common rate.
bool shares_within_common_rate(const PowerAllocation& alloc,
                               const RateReport& report, double tol = 1e-9);

}  // namespace ofdmrsma
