#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ofdmrsma/link_analysis.hpp"

namespace ofdmrsma {

struct OptimizerOptions {
  int max_iters = 200;
  double rel_tol = 1e-4;     ///< relative objective-change stopping threshold
  int num_starts = 5;
  double power_budget = 1.0;
  RVector min_rates;         ///< per-user minimum rate; empty means all zero
  double noise_var = 1.0;
  std::uint64_t seed = 1;    ///< seeds the random multi-start points

  void validate() const;
};

struct OptimizerResult {
  PowerAllocation alloc;
  RateReport report;
  std::vector<double> objective_trace;  ///< objective after each outer step,
                                        ///< starting at the initial point
  bool converged = false;
  int iterations = 0;
  double max_identity_residual = 0.0;  ///< worst |log2-MSE rate - direct rate|
  double kkt_residual = 0.0;           ///< amplitude subproblem, final step
};

/// Raised when the per-user minimum rates cannot all be met even with the
/// full power budget.
class QosInfeasible : public std::runtime_error {
 public:
  QosInfeasible(const std::string& what, double best_slack)
      : std::runtime_error(what), best_slack_(best_slack) {}
  double best_slack() const { return best_slack_; }

 private:
  double best_slack_;
};

/// Alternating MMSE-equalizer / weight / amplitude optimization of the
/// common+private sum rate, best result over the multi-start set.
OptimizerResult optimize_rsma(std::span<const CouplingMatrix> couplings,
                              const OptimizerOptions& opts);

/// Same loop without a common stream and with the fixed-order successive
/// cancellation interference structure.
OptimizerResult optimize_noma(std::span<const CouplingMatrix> couplings,
                              const OptimizerOptions& opts,
                              const std::vector<int>& sic_order);

enum class OfdmaAssignMode { equal_split, best_gain };

/// equal_split: first ceil(N/K) carriers to user 0 and so on, contiguous.
/// best_gain: carrier n to the user with the largest |g_{k,nn}|^2, ties to
/// the lower user index.
std::vector<int> assign_subcarriers_ofdma(
    std::span<const CouplingMatrix> couplings, OfdmaAssignMode mode);

/// Classic waterfilling over the assigned diagonal gains; the water level is
/// bisected until the budget is met to 1e-9. Rates are evaluated with the
/// full leakage-aware OFDMA model.
OptimizerResult waterfill_ofdma(std::span<const CouplingMatrix> couplings,
                                const std::vector<int>& assignment,
                                const OptimizerOptions& opts);

}  // namespace ofdmrsma
