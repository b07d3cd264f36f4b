#pragma once

#include <span>
#include <vector>

#include "ofdmrsma/link_analysis.hpp"

namespace ofdmrsma {

/// Exhaustive-search resolution over the power simplex {q >= 0, sum q <= P_t}.
struct GridSpec {
  int levels = 21;  ///< grid points per dimension, includes 0 and P_t
  double total_power = 1.0;
};

enum class OracleScheme { rsma, noma, ofdma };

struct GridSearchResult {
  PowerAllocation alloc;        ///< best point found
  double sum_rate = 0.0;
  std::vector<int> assignment;  ///< filled for the ofdma scheme
};

/// Brute-force maximization of the scheme's sum rate over every grid point of
/// the scaled simplex, evaluating through link_analysis. Intended for tiny
/// instances; rejects searches enumerating more than 10^7 points.
/// sic_order defaults to users ordered by ascending total diagonal gain.
GridSearchResult grid_search_best(std::span<const CouplingMatrix> couplings,
                                  OracleScheme scheme, const GridSpec& grid,
                                  double noise_var,
                                  std::vector<int> sic_order = {});

enum class StreamKind { rsma_common, rsma_private, noma_private };

/// Power decomposition recomputed with explicit nested loops over every
/// stream/subcarrier term, forming the per-stream leakage matrices entry by
/// entry. No matrix algebra; test-support reference path.
SinrDecomposition loop_power_decomposition(
    std::span<const CouplingMatrix> couplings, const PowerAllocation& alloc,
    StreamKind kind, const std::vector<int>& sic_order, double noise_var,
    int user, int subcarrier);

/// Users sorted by ascending total diagonal gain (weak user first).
std::vector<int> default_sic_order(std::span<const CouplingMatrix> couplings);

}  // namespace ofdmrsma
