#include "ofdmrsma/reference_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace ofdmrsma {

std::vector<int> default_sic_order(std::span<const CouplingMatrix> couplings) {
  const int k_users = static_cast<int>(couplings.size());
  std::vector<double> gain(k_users, 0.0);
  for (int k = 0; k < k_users; ++k) {
    const CMatrix& g = couplings[k].g;
    for (int n = 0; n < g.rows(); ++n) {
      gain[k] += std::norm(g(n, n));
    }
  }
  std::vector<int> order(k_users);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return gain[a] < gain[b]; });
  return order;
}

SinrDecomposition loop_power_decomposition(
    std::span<const CouplingMatrix> couplings, const PowerAllocation& alloc,
    StreamKind kind, const std::vector<int>& sic_order, double noise_var,
    int user, int subcarrier) {
  const CMatrix& g = couplings[user].g;
  const int n = static_cast<int>(g.rows());
  const int k_users = alloc.num_users();

  // Amplitudes recovered from powers; every matrix below is built entry by
  // entry as G * diag(p) and its row `subcarrier` is accumulated term by term.
  auto amp = [](double q) { return std::sqrt(q); };

  std::vector<int> position(k_users, 0);
  if (kind == StreamKind::noma_private) {
    if (!is_permutation(sic_order, k_users)) {
      throw std::invalid_argument("loop_power_decomposition: bad sic_order");
    }
    for (int pos = 0; pos < k_users; ++pos) {
      position[sic_order[pos]] = pos;
    }
  }

  SinrDecomposition d;
  d.noise = noise_var;

  if (kind == StreamKind::rsma_common) {
    // Signal matrix: G * diag(p_cn * e_n); its (n, n) entry is the kept term.
    d.signal =
        std::norm(g(subcarrier, subcarrier) * amp(alloc.common[subcarrier]));
    // ICI matrix: G * diag(p_c with entry n zeroed); sum row n over all j.
    for (int j = 0; j < n; ++j) {
      const double p_bar = j == subcarrier ? 0.0 : amp(alloc.common[j]);
      const Complex entry = g(subcarrier, j) * p_bar;
      d.ici += std::norm(entry);
    }
    // MUI matrices: one per user u over every private stream, all subcarriers.
    for (int u = 0; u < k_users; ++u) {
      for (int j = 0; j < n; ++j) {
        const Complex entry = g(subcarrier, j) * amp(alloc.private_powers(u, j));
        d.mui += std::norm(entry);
      }
    }
  } else {
    const RMatrix& q = alloc.private_powers;
    {
      const Complex entry =
          g(subcarrier, subcarrier) * amp(q(user, subcarrier));
      d.signal = std::norm(entry);
    }
    for (int j = 0; j < n; ++j) {
      const double p_bar = j == subcarrier ? 0.0 : amp(q(user, j));
      const Complex entry = g(subcarrier, j) * p_bar;
      d.ici += std::norm(entry);
    }
    for (int u = 0; u < k_users; ++u) {
      const bool interferes = kind == StreamKind::rsma_private
                                  ? u != user
                                  : position[u] > position[user];
      if (!interferes) continue;
      for (int j = 0; j < n; ++j) {
        const Complex entry = g(subcarrier, j) * amp(q(u, j));
        d.mui += std::norm(entry);
      }
    }
  }
  return d;
}

namespace {

// Walks every lattice point of {m >= 0, sum m <= levels-1} scaled to the
// power simplex, invoking fn with the candidate power vector.
void walk_simplex(int dims, int levels, double total_power,
                  const std::function<void(const RVector&)>& fn) {
  RVector point = RVector::Zero(dims);
  const double step = total_power / (levels - 1);
  std::function<void(int, int)> rec = [&](int dim, int remaining) {
    if (dim == dims) {
      fn(point);
      return;
    }
    for (int m = 0; m <= remaining; ++m) {
      point[dim] = m * step;
      rec(dim + 1, remaining - m);
    }
    point[dim] = 0.0;
  };
  rec(0, levels - 1);
}

// Number of lattice points of the simplex: C(levels-1+dims, dims).
double simplex_point_count(int dims, int levels) {
  double count = 1.0;
  for (int i = 1; i <= dims; ++i) {
    count *= static_cast<double>(levels - 1 + i) / i;
  }
  return count;
}

}  // namespace

GridSearchResult grid_search_best(std::span<const CouplingMatrix> couplings,
                                  OracleScheme scheme, const GridSpec& grid,
                                  double noise_var,
                                  std::vector<int> sic_order) {
  if (grid.levels < 2) {
    throw std::invalid_argument("grid_search_best: levels must be >= 2");
  }
  const int k_users = static_cast<int>(couplings.size());
  const int n = static_cast<int>(couplings[0].g.rows());
  const int dims = scheme == OracleScheme::rsma ? (k_users + 1) * n
                   : scheme == OracleScheme::noma ? k_users * n
                                                  : n;
  if (dims > 6) {
    throw std::invalid_argument("grid_search_best: more than 6 grid dimensions");
  }
  if (simplex_point_count(dims, grid.levels) > 1e7) {
    throw std::invalid_argument("grid_search_best: grid too large");
  }
  if (sic_order.empty()) {
    sic_order = default_sic_order(couplings);
  }

  std::vector<int> assignment;
  if (scheme == OracleScheme::ofdma) {
    assignment.resize(n);
    for (int sc = 0; sc < n; ++sc) {
      int best = 0;
      for (int k = 1; k < k_users; ++k) {
        if (std::norm(couplings[k].g(sc, sc)) >
            std::norm(couplings[best].g(sc, sc))) {
          best = k;
        }
      }
      assignment[sc] = best;
    }
  }

  GridSearchResult result;
  result.alloc = PowerAllocation::zeros(k_users, n);
  result.sum_rate = -1.0;
  result.assignment = assignment;

  walk_simplex(dims, grid.levels, grid.total_power, [&](const RVector& point) {
    PowerAllocation alloc = PowerAllocation::zeros(k_users, n);
    double rate = 0.0;
    switch (scheme) {
      case OracleScheme::rsma: {
        alloc.common = point.head(n);
        for (int u = 0; u < k_users; ++u) {
          alloc.private_powers.row(u) = point.segment(n + u * n, n).transpose();
        }
        rate = evaluate_rsma(couplings, alloc, noise_var).sum_rate;
        break;
      }
      case OracleScheme::noma: {
        for (int u = 0; u < k_users; ++u) {
          alloc.private_powers.row(u) = point.segment(u * n, n).transpose();
        }
        rate = evaluate_noma(couplings, alloc.private_powers, noise_var,
                             sic_order)
                   .sum_rate;
        break;
      }
      case OracleScheme::ofdma: {
        for (int sc = 0; sc < n; ++sc) {
          alloc.private_powers(assignment[sc], sc) = point[sc];
        }
        rate = evaluate_ofdma(couplings, assignment, point, noise_var).sum_rate;
        break;
      }
    }
    if (rate > result.sum_rate) {
      result.sum_rate = rate;
      result.alloc = alloc;
    }
  });
  return result;
}

}  // namespace ofdmrsma
