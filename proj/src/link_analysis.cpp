#include "ofdmrsma/link_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ofdmrsma {

namespace {

void check_stream_index(std::span<const CouplingMatrix> couplings, int user,
                        int subcarrier) {
  if (couplings.empty()) {
    throw std::invalid_argument("sinr: no coupling matrices");
  }
  const int n = static_cast<int>(couplings[0].g.rows());
  if (user < 0 || user >= static_cast<int>(couplings.size())) {
    throw std::invalid_argument("sinr: user index out of range");
  }
  if (subcarrier < 0 || subcarrier >= n) {
    throw std::invalid_argument("sinr: subcarrier index out of range");
  }
}

}  // namespace

PowerAllocation PowerAllocation::zeros(int num_users, int n_subcarriers) {
  PowerAllocation a;
  a.common = RVector::Zero(n_subcarriers);
  a.private_powers = RMatrix::Zero(num_users, n_subcarriers);
  a.common_shares = RVector::Zero(num_users);
  return a;
}

bool PowerAllocation::within_budget(double power_budget, double tol) const {
  if (common.minCoeff() < 0.0 || private_powers.minCoeff() < 0.0 ||
      (common_shares.size() > 0 && common_shares.minCoeff() < 0.0)) {
    return false;
  }
  return total_power() <= power_budget + tol;
}

bool shares_within_common_rate(const PowerAllocation& alloc,
                               const RateReport& report, double tol) {
  if (alloc.common_shares.size() > 0 && alloc.common_shares.minCoeff() < 0.0) {
    return false;
  }
  return alloc.common_shares.sum() <= report.common_total + tol;
}

bool is_permutation(const std::vector<int>& sic_order, int num_users) {
  if (static_cast<int>(sic_order.size()) != num_users) return false;
  std::vector<bool> seen(num_users, false);
  for (int u : sic_order) {
    if (u < 0 || u >= num_users || seen[u]) return false;
    seen[u] = true;
  }
  return true;
}

SinrDecomposition rsma_common_sinr(std::span<const CouplingMatrix> couplings,
                                   const PowerAllocation& alloc,
                                   double noise_var, int user,
                                   int subcarrier) {
  check_stream_index(couplings, user, subcarrier);
  const CMatrix& g = couplings[user].g;
  const int n = static_cast<int>(g.rows());
  const int k_users = alloc.num_users();

  SinrDecomposition d;
  d.noise = noise_var;
  d.signal = std::norm(g(subcarrier, subcarrier)) * alloc.common[subcarrier];
  for (int j = 0; j < n; ++j) {
    const double leak = std::norm(g(subcarrier, j));
    if (j != subcarrier) {
      d.ici += leak * alloc.common[j];
    }
    for (int u = 0; u < k_users; ++u) {
      d.mui += leak * alloc.private_powers(u, j);
    }
  }
  return d;
}

SinrDecomposition rsma_private_sinr(std::span<const CouplingMatrix> couplings,
                                    const PowerAllocation& alloc,
                                    double noise_var, int user,
                                    int subcarrier) {
  check_stream_index(couplings, user, subcarrier);
  const CMatrix& g = couplings[user].g;
  const int n = static_cast<int>(g.rows());
  const int k_users = alloc.num_users();

  SinrDecomposition d;
  d.noise = noise_var;
  d.signal =
      std::norm(g(subcarrier, subcarrier)) * alloc.private_powers(user, subcarrier);
  for (int j = 0; j < n; ++j) {
    const double leak = std::norm(g(subcarrier, j));
    if (j != subcarrier) {
      d.ici += leak * alloc.private_powers(user, j);
    }
    for (int u = 0; u < k_users; ++u) {
      if (u != user) {
        d.mui += leak * alloc.private_powers(u, j);
      }
    }
  }
  return d;
}

SinrDecomposition noma_private_sinr(std::span<const CouplingMatrix> couplings,
                                    const RMatrix& q_noma, double noise_var,
                                    const std::vector<int>& sic_order, int user,
                                    int subcarrier) {
  check_stream_index(couplings, user, subcarrier);
  const int k_users = static_cast<int>(q_noma.rows());
  if (!is_permutation(sic_order, k_users)) {
    throw std::invalid_argument("noma_private_sinr: sic_order is not a "
                                "permutation of the users");
  }
  std::vector<int> position(k_users);
  for (int pos = 0; pos < k_users; ++pos) {
    position[sic_order[pos]] = pos;
  }

  const CMatrix& g = couplings[user].g;
  const int n = static_cast<int>(g.rows());

  SinrDecomposition d;
  d.noise = noise_var;
  d.signal = std::norm(g(subcarrier, subcarrier)) * q_noma(user, subcarrier);
  for (int j = 0; j < n; ++j) {
    const double leak = std::norm(g(subcarrier, j));
    if (j != subcarrier) {
      d.ici += leak * q_noma(user, j);
    }
    for (int u = 0; u < k_users; ++u) {
      if (position[u] > position[user]) {
        d.mui += leak * q_noma(u, j);
      }
    }
  }
  return d;
}

double rate_from_sinr(const SinrDecomposition& d) {
  if (d.noise <= 0.0) {
    throw std::invalid_argument("rate_from_sinr: noise must be positive");
  }
  return std::log2(1.0 + d.sinr());
}

RateReport evaluate_rsma(std::span<const CouplingMatrix> couplings,
                         const PowerAllocation& alloc, double noise_var) {
  const int k_users = alloc.num_users();
  const int n = alloc.num_subcarriers();
  RateReport report;
  report.common_rate_per_user = RMatrix::Zero(k_users, n);
  report.private_rate = RMatrix::Zero(k_users, n);
  for (int k = 0; k < k_users; ++k) {
    for (int sc = 0; sc < n; ++sc) {
      report.common_rate_per_user(k, sc) =
          rate_from_sinr(rsma_common_sinr(couplings, alloc, noise_var, k, sc));
      report.private_rate(k, sc) =
          rate_from_sinr(rsma_private_sinr(couplings, alloc, noise_var, k, sc));
    }
  }
  report.common_total = report.common_rate_per_user.rowwise().sum().minCoeff();
  report.sum_rate = report.common_total + report.private_rate.sum();
  return report;
}

RateReport evaluate_noma(std::span<const CouplingMatrix> couplings,
                         const RMatrix& q_noma, double noise_var,
                         const std::vector<int>& sic_order) {
  const int k_users = static_cast<int>(q_noma.rows());
  const int n = static_cast<int>(q_noma.cols());
  RateReport report;
  report.common_rate_per_user = RMatrix::Zero(k_users, n);
  report.private_rate = RMatrix::Zero(k_users, n);
  for (int k = 0; k < k_users; ++k) {
    for (int sc = 0; sc < n; ++sc) {
      report.private_rate(k, sc) = rate_from_sinr(
          noma_private_sinr(couplings, q_noma, noise_var, sic_order, k, sc));
    }
  }
  report.common_total = 0.0;
  report.sum_rate = report.private_rate.sum();
  return report;
}

RateReport evaluate_ofdma(std::span<const CouplingMatrix> couplings,
                          const std::vector<int>& assignment, const RVector& q,
                          double noise_var) {
  if (couplings.empty()) {
    throw std::invalid_argument("evaluate_ofdma: no coupling matrices");
  }
  const int k_users = static_cast<int>(couplings.size());
  const int n = static_cast<int>(couplings[0].g.rows());
  if (static_cast<int>(assignment.size()) != n || q.size() != n) {
    throw std::invalid_argument("evaluate_ofdma: assignment/powers length != N");
  }
  RateReport report;
  report.common_rate_per_user = RMatrix::Zero(k_users, n);
  report.private_rate = RMatrix::Zero(k_users, n);
  for (int sc = 0; sc < n; ++sc) {
    const int owner = assignment[sc];
    if (owner < 0 || owner >= k_users) {
      throw std::invalid_argument("evaluate_ofdma: subcarrier without a valid "
                                  "assigned user");
    }
    const CMatrix& g = couplings[owner].g;
    double interference = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j != sc) {
        interference += std::norm(g(sc, j)) * q[j];
      }
    }
    const double sinr =
        std::norm(g(sc, sc)) * q[sc] / (interference + noise_var);
    report.private_rate(owner, sc) = std::log2(1.0 + sinr);
  }
  report.common_total = 0.0;
  report.sum_rate = report.private_rate.sum();
  return report;
}

}  // namespace ofdmrsma
