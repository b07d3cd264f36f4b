#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ofdmrsma/link_analysis.hpp"
#include "ofdmrsma/reference_oracle.hpp"

using namespace ofdmrsma;

namespace {

std::vector<CouplingMatrix> random_couplings(int k_users, int n,
                                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<CouplingMatrix> couplings(k_users);
  for (int k = 0; k < k_users; ++k) {
    couplings[k].user_id = k;
    couplings[k].g.resize(n, n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        couplings[k].g(r, c) = Complex(normal(rng), normal(rng));
      }
    }
  }
  return couplings;
}

std::vector<CouplingMatrix> diagonal_couplings(
    const std::vector<std::vector<Complex>>& diags) {
  std::vector<CouplingMatrix> couplings(diags.size());
  for (std::size_t k = 0; k < diags.size(); ++k) {
    const int n = static_cast<int>(diags[k].size());
    couplings[k].user_id = static_cast<int>(k);
    couplings[k].g = CMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) couplings[k].g(i, i) = diags[k][i];
  }
  return couplings;
}

PowerAllocation random_alloc(int k_users, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 2.0);
  PowerAllocation alloc = PowerAllocation::zeros(k_users, n);
  for (int i = 0; i < n; ++i) alloc.common[i] = unif(rng);
  for (int k = 0; k < k_users; ++k) {
    for (int i = 0; i < n; ++i) alloc.private_powers(k, i) = unif(rng);
  }
  return alloc;
}

}  // namespace

TEST_CASE("common sinr, diagonal channel, single powered subcarrier") {
  const auto couplings =
      diagonal_couplings({{Complex(0.8, 0.6), Complex(1.0, 0.0)}});
  PowerAllocation alloc = PowerAllocation::zeros(1, 2);
  alloc.common[0] = 2.0;
  const auto d = rsma_common_sinr(couplings, alloc, 0.5, 0, 0);
  CHECK(d.signal == doctest::Approx(1.0 * 2.0));  // |0.8+0.6j|^2 = 1
  CHECK(d.ici == 0.0);
  CHECK(d.mui == 0.0);
  CHECK(d.sinr() == doctest::Approx(2.0 / 0.5));
}

TEST_CASE("zero common power means zero common signal and sinr") {
  const auto couplings = random_couplings(2, 3, 17);
  PowerAllocation alloc = random_alloc(2, 3, 18);
  alloc.common.setZero();
  for (int k = 0; k < 2; ++k) {
    for (int sc = 0; sc < 3; ++sc) {
      const auto d = rsma_common_sinr(couplings, alloc, 1.0, k, sc);
      CHECK(d.signal == 0.0);
      CHECK(rate_from_sinr(d) == 0.0);
    }
  }
}

TEST_CASE("private sinr, single user, diagonal channel has no interference") {
  const auto couplings =
      diagonal_couplings({{Complex(0.5, 0.0), Complex(0.0, 2.0)}});
  PowerAllocation alloc = PowerAllocation::zeros(1, 2);
  alloc.private_powers(0, 0) = 3.0;
  alloc.private_powers(0, 1) = 1.0;
  const auto d = rsma_private_sinr(couplings, alloc, 2.0, 0, 1);
  CHECK(d.signal == doctest::Approx(4.0 * 1.0));
  CHECK(d.ici == 0.0);
  CHECK(d.mui == 0.0);
  CHECK(d.sinr() == doctest::Approx(4.0 / 2.0));
}

TEST_CASE("two users on a diagonal channel interfere only on-carrier") {
  const auto couplings = diagonal_couplings(
      {{Complex(1.0, 0.0), Complex(0.7, 0.0)},
       {Complex(0.3, 0.4), Complex(2.0, 0.0)}});
  PowerAllocation alloc = PowerAllocation::zeros(2, 2);
  alloc.private_powers << 1.0, 2.0, 4.0, 0.5;
  const auto d = rsma_private_sinr(couplings, alloc, 1.0, 0, 0);
  CHECK(d.signal == doctest::Approx(1.0));
  CHECK(d.ici == 0.0);
  CHECK(d.mui == doctest::Approx(1.0 * 4.0));  // user 1's power on carrier 0
}

TEST_CASE("dense decompositions match the loop oracle term by term") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto couplings = random_couplings(2, 2, 100 + seed);
    const PowerAllocation alloc = random_alloc(2, 2, 200 + seed);
    const double noise = 0.7;
    const std::vector<int> order{1, 0};
    for (int k = 0; k < 2; ++k) {
      for (int sc = 0; sc < 2; ++sc) {
        const auto a = rsma_common_sinr(couplings, alloc, noise, k, sc);
        const auto a_ref = loop_power_decomposition(
            couplings, alloc, StreamKind::rsma_common, {}, noise, k, sc);
        CHECK(std::abs(a.signal - a_ref.signal) < 1e-10);
        CHECK(std::abs(a.ici - a_ref.ici) < 1e-10);
        CHECK(std::abs(a.mui - a_ref.mui) < 1e-10);

        const auto b = rsma_private_sinr(couplings, alloc, noise, k, sc);
        const auto b_ref = loop_power_decomposition(
            couplings, alloc, StreamKind::rsma_private, {}, noise, k, sc);
        CHECK(std::abs(b.signal - b_ref.signal) < 1e-10);
        CHECK(std::abs(b.ici - b_ref.ici) < 1e-10);
        CHECK(std::abs(b.mui - b_ref.mui) < 1e-10);

        const auto c = noma_private_sinr(couplings, alloc.private_powers,
                                         noise, order, k, sc);
        const auto c_ref = loop_power_decomposition(
            couplings, alloc, StreamKind::noma_private, order, noise, k, sc);
        CHECK(std::abs(c.signal - c_ref.signal) < 1e-10);
        CHECK(std::abs(c.ici - c_ref.ici) < 1e-10);
        CHECK(std::abs(c.mui - c_ref.mui) < 1e-10);
      }
    }
  }
}

TEST_CASE("decomposition total equals the received power") {
  // T = sum of squared row entries of the stream matrices plus noise; the
  // split must reproduce it exactly.
  const auto couplings = random_couplings(2, 4, 5);
  const PowerAllocation alloc = random_alloc(2, 4, 6);
  const double noise = 1.3;
  for (int k = 0; k < 2; ++k) {
    for (int sc = 0; sc < 4; ++sc) {
      const CMatrix& g = couplings[k].g;
      // Common stage: everything received.
      double t_direct = noise;
      for (int j = 0; j < 4; ++j) {
        t_direct += std::norm(g(sc, j)) *
                    (alloc.common[j] + alloc.private_powers.col(j).sum());
      }
      const auto d = rsma_common_sinr(couplings, alloc, noise, k, sc);
      CHECK(d.total() == doctest::Approx(t_direct).epsilon(1e-10));

      // Private stage: common stream removed.
      double t_private = noise;
      for (int j = 0; j < 4; ++j) {
        t_private += std::norm(g(sc, j)) * alloc.private_powers.col(j).sum();
      }
      const auto p = rsma_private_sinr(couplings, alloc, noise, k, sc);
      CHECK(p.total() == doctest::Approx(t_private).epsilon(1e-10));
    }
  }
}

TEST_CASE("noma sic ordering removes earlier users only") {
  const auto couplings = diagonal_couplings(
      {{Complex(1.0, 0.0), Complex(1.0, 0.0)},
       {Complex(2.0, 0.0), Complex(2.0, 0.0)}});
  RMatrix q(2, 2);
  q << 1.0, 1.0, 2.0, 2.0;
  const std::vector<int> order{0, 1};  // user 0 decoded first

  // Last user in order: interference-free.
  const auto last = noma_private_sinr(couplings, q, 1.0, order, 1, 0);
  CHECK(last.mui == 0.0);
  CHECK(last.sinr() == doctest::Approx(4.0 * 2.0 / 1.0));

  // First user: sees the later user's power on the same carrier.
  const auto first = noma_private_sinr(couplings, q, 1.0, order, 0, 0);
  CHECK(first.mui == doctest::Approx(1.0 * 2.0));

  CHECK_THROWS_AS(noma_private_sinr(couplings, q, 1.0, {0, 0}, 0, 0),
                  std::invalid_argument);
}

TEST_CASE("rate_from_sinr arithmetic") {
  CHECK(rate_from_sinr({1.0, 0.0, 0.0, 1.0}) == doctest::Approx(1.0));
  CHECK(rate_from_sinr({0.0, 0.3, 0.2, 1.0}) == 0.0);
  CHECK(rate_from_sinr({3.0, 0.5, 0.5, 1.0}) ==
        doctest::Approx(std::log2(2.5)));
  CHECK_THROWS_AS(rate_from_sinr({1.0, 0.0, 0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("evaluate_rsma aggregates: no common power, single user") {
  const auto couplings = random_couplings(2, 3, 31);
  PowerAllocation alloc = random_alloc(2, 3, 32);
  alloc.common.setZero();
  const auto report = evaluate_rsma(couplings, alloc, 1.0);
  CHECK(report.common_total == 0.0);
  CHECK(report.sum_rate == doctest::Approx(report.private_rate.sum()));

  // K = 1: the min over users is the single user's sum.
  const auto single = random_couplings(1, 3, 33);
  const PowerAllocation alloc1 = random_alloc(1, 3, 34);
  const auto report1 = evaluate_rsma(single, alloc1, 1.0);
  CHECK(report1.common_total ==
        doctest::Approx(report1.common_rate_per_user.row(0).sum()));
}

TEST_CASE("evaluate_rsma equals the composition of per-stream oracles") {
  const auto couplings = random_couplings(2, 2, 41);
  const PowerAllocation alloc = random_alloc(2, 2, 42);
  const double noise = 0.9;
  const auto report = evaluate_rsma(couplings, alloc, noise);

  double expected_common[2] = {0.0, 0.0};
  double expected_private = 0.0;
  for (int k = 0; k < 2; ++k) {
    for (int sc = 0; sc < 2; ++sc) {
      expected_common[k] += rate_from_sinr(loop_power_decomposition(
          couplings, alloc, StreamKind::rsma_common, {}, noise, k, sc));
      expected_private += rate_from_sinr(loop_power_decomposition(
          couplings, alloc, StreamKind::rsma_private, {}, noise, k, sc));
    }
  }
  const double expected =
      std::min(expected_common[0], expected_common[1]) + expected_private;
  CHECK(report.sum_rate == doctest::Approx(expected).epsilon(1e-12));
  CHECK(report.common_total <=
        report.common_rate_per_user.rowwise().sum().minCoeff() + 1e-12);
}

TEST_CASE("evaluate_noma basics") {
  const auto couplings = random_couplings(2, 2, 51);
  RMatrix q = RMatrix::Zero(2, 2);
  const std::vector<int> order{0, 1};
  CHECK(evaluate_noma(couplings, q, 1.0, order).sum_rate == 0.0);

  // Single user NOMA is plain single-user OFDM.
  const auto one = random_couplings(1, 3, 52);
  RMatrix q1(1, 3);
  q1 << 1.0, 2.0, 0.5;
  const auto report = evaluate_noma(one, q1, 1.0, {0});
  PowerAllocation alloc = PowerAllocation::zeros(1, 3);
  alloc.private_powers = q1;
  const auto rsma_report = evaluate_rsma(one, alloc, 1.0);
  CHECK(report.sum_rate == doctest::Approx(rsma_report.private_rate.sum()));
}

TEST_CASE("rsma and noma coincide for one user with no common stream") {
  const auto couplings = random_couplings(1, 4, 61);
  PowerAllocation alloc = random_alloc(1, 4, 62);
  alloc.common.setZero();
  const auto rsma_report = evaluate_rsma(couplings, alloc, 1.0);
  const auto noma_report =
      evaluate_noma(couplings, alloc.private_powers, 1.0, {0});
  CHECK(rsma_report.sum_rate ==
        doctest::Approx(noma_report.sum_rate).epsilon(1e-12));
}

TEST_CASE("evaluate_ofdma: diagonal couplings have no interference") {
  const auto couplings = diagonal_couplings(
      {{Complex(1.0, 0.0), Complex(0.5, 0.0)},
       {Complex(0.2, 0.0), Complex(3.0, 0.0)}});
  RVector q(2);
  q << 2.0, 1.0;
  const auto report = evaluate_ofdma(couplings, {0, 1}, q, 1.0);
  const double expected = std::log2(1.0 + 1.0 * 2.0) + std::log2(1.0 + 9.0);
  CHECK(report.sum_rate == doctest::Approx(expected));

  // All power on one carrier.
  RVector q2(2);
  q2 << 2.0, 0.0;
  const auto single = evaluate_ofdma(couplings, {0, 1}, q2, 1.0);
  CHECK(single.sum_rate == doctest::Approx(std::log2(3.0)));
}

TEST_CASE("evaluate_ofdma counts every off-carrier leak as interference") {
  const auto couplings = random_couplings(2, 4, 71);
  std::vector<int> assignment{0, 1, 0, 1};
  RVector q(4);
  q << 1.0, 2.0, 0.5, 1.5;
  const auto report = evaluate_ofdma(couplings, assignment, q, 0.8);

  double expected = 0.0;
  for (int sc = 0; sc < 4; ++sc) {
    const CMatrix& g = couplings[assignment[sc]].g;
    double interference = 0.0;
    for (int j = 0; j < 4; ++j) {
      if (j != sc) interference += std::norm(g(sc, j)) * q[j];
    }
    expected +=
        std::log2(1.0 + std::norm(g(sc, sc)) * q[sc] / (interference + 0.8));
  }
  CHECK(report.sum_rate == doctest::Approx(expected).epsilon(1e-12));

  CHECK_THROWS_AS(evaluate_ofdma(couplings, {0, 1, 0, 7}, q, 1.0),
                  std::invalid_argument);
}

TEST_CASE("interference monotonicity and scale covariance") {
  const auto couplings = random_couplings(2, 3, 81);
  const PowerAllocation alloc = random_alloc(2, 3, 82);
  const double noise = 1.1;

  const double base =
      rsma_private_sinr(couplings, alloc, noise, 0, 1).sinr();

  // More interfering power never helps.
  PowerAllocation bumped = alloc;
  bumped.private_powers(1, 2) += 0.7;
  CHECK(rsma_private_sinr(couplings, bumped, noise, 0, 1).sinr() <= base);

  // More own power on the carrier never hurts.
  PowerAllocation own = alloc;
  own.private_powers(0, 1) += 0.7;
  CHECK(rsma_private_sinr(couplings, own, noise, 0, 1).sinr() >= base);

  // Scaling all powers and the noise leaves the SINR unchanged.
  PowerAllocation scaled = alloc;
  scaled.common *= 3.0;
  scaled.private_powers *= 3.0;
  const double scaled_sinr =
      rsma_private_sinr(couplings, scaled, 3.0 * noise, 0, 1).sinr();
  CHECK(scaled_sinr == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("zero doppler collapse: diagonal couplings have zero ici") {
  const auto couplings = diagonal_couplings(
      {{Complex(0.9, 0.1), Complex(0.4, -0.2), Complex(1.5, 0.0)}});
  const PowerAllocation alloc = random_alloc(1, 3, 91);
  for (int sc = 0; sc < 3; ++sc) {
    CHECK(rsma_common_sinr(couplings, alloc, 1.0, 0, sc).ici == 0.0);
    CHECK(rsma_private_sinr(couplings, alloc, 1.0, 0, sc).ici == 0.0);
  }
}

TEST_CASE("three-user noma matches the loop oracle") {
  const auto couplings = random_couplings(3, 2, 97);
  PowerAllocation alloc = random_alloc(3, 2, 98);
  const std::vector<int> order{2, 0, 1};
  for (int k = 0; k < 3; ++k) {
    for (int sc = 0; sc < 2; ++sc) {
      const auto got = noma_private_sinr(couplings, alloc.private_powers, 0.8,
                                         order, k, sc);
      const auto want = loop_power_decomposition(
          couplings, alloc, StreamKind::noma_private, order, 0.8, k, sc);
      CHECK(std::abs(got.signal - want.signal) < 1e-10);
      CHECK(std::abs(got.ici - want.ici) < 1e-10);
      CHECK(std::abs(got.mui - want.mui) < 1e-10);
    }
  }
  // The user decoded last never sees multi-user interference.
  CHECK(noma_private_sinr(couplings, alloc.private_powers, 0.8, order, 1, 0)
            .mui == 0.0);
}

TEST_CASE("common-rate shares are checked against the report") {
  const auto couplings = random_couplings(2, 2, 95);
  PowerAllocation alloc = random_alloc(2, 2, 96);
  const auto report = evaluate_rsma(couplings, alloc, 1.0);
  alloc.common_shares.setZero();
  CHECK(shares_within_common_rate(alloc, report));
  alloc.common_shares.setConstant(report.common_total / 2.0);
  CHECK(shares_within_common_rate(alloc, report));
  alloc.common_shares.setConstant(report.common_total);
  CHECK_FALSE(shares_within_common_rate(alloc, report));
  alloc.common_shares.setZero();
  alloc.common_shares[0] = -0.1;
  CHECK_FALSE(shares_within_common_rate(alloc, report));
}

TEST_CASE("power allocation budget accounting") {
  PowerAllocation alloc = PowerAllocation::zeros(2, 2);
  alloc.common << 1.0, 0.5;
  alloc.private_powers << 0.25, 0.25, 0.5, 0.5;
  CHECK(alloc.total_power() == doctest::Approx(3.0));
  CHECK(alloc.within_budget(3.0));
  CHECK_FALSE(alloc.within_budget(2.9));
  alloc.common[0] = -0.1;
  CHECK_FALSE(alloc.within_budget(10.0));
}
