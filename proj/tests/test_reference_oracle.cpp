#include <doctest.h>

#include <cmath>
#include <random>

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

CouplingMatrix scalar_coupling(Complex gain) {
  CouplingMatrix c;
  c.user_id = 0;
  c.g = CMatrix::Constant(1, 1, gain);
  return c;
}

}  // namespace

TEST_CASE("single user, single carrier: all power on the only dimension") {
  const std::vector<CouplingMatrix> couplings{scalar_coupling({0.8, 0.6})};
  GridSpec grid;
  grid.levels = 11;
  grid.total_power = 4.0;
  const auto best = grid_search_best(couplings, OracleScheme::noma, grid, 1.0);
  CHECK(best.sum_rate == doctest::Approx(std::log2(1.0 + 1.0 * 4.0)));
  CHECK(best.alloc.private_powers(0, 0) == doctest::Approx(4.0));
}

TEST_CASE("equal gains split evenly to within one grid step") {
  std::vector<CouplingMatrix> couplings(1);
  couplings[0].user_id = 0;
  couplings[0].g = CMatrix::Identity(2, 2);
  GridSpec grid;
  grid.levels = 21;
  grid.total_power = 2.0;
  const auto best = grid_search_best(couplings, OracleScheme::noma, grid, 1.0);
  const double step = grid.total_power / (grid.levels - 1);
  CHECK(std::abs(best.alloc.private_powers(0, 0) - 1.0) <= step + 1e-12);
  CHECK(std::abs(best.alloc.private_powers(0, 1) - 1.0) <= step + 1e-12);
}

TEST_CASE("finer grids never find a worse optimum") {
  const auto couplings = random_couplings(2, 2, 7);
  double previous = -1.0;
  for (int levels : {6, 11, 21}) {
    GridSpec grid;
    grid.levels = levels;
    grid.total_power = 5.0;
    const auto best =
        grid_search_best(couplings, OracleScheme::noma, grid, 1.0);
    CHECK(best.sum_rate >= previous - 1e-12);
    previous = best.sum_rate;
  }
}

TEST_CASE("rsma grid search beats a handful of feasible probes") {
  const auto couplings = random_couplings(2, 2, 9);
  GridSpec grid;
  grid.levels = 11;
  grid.total_power = 4.0;
  const auto best = grid_search_best(couplings, OracleScheme::rsma, grid, 1.0);
  CHECK(best.alloc.within_budget(grid.total_power, 1e-9));

  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int probe = 0; probe < 30; ++probe) {
    PowerAllocation alloc = PowerAllocation::zeros(2, 2);
    double total = 0.0;
    for (int i = 0; i < 2; ++i) {
      alloc.common[i] = unif(rng);
      total += alloc.common[i];
      for (int k = 0; k < 2; ++k) {
        alloc.private_powers(k, i) = unif(rng);
        total += alloc.private_powers(k, i);
      }
    }
    alloc.common *= grid.total_power / total;
    alloc.private_powers *= grid.total_power / total;
    const double rate = evaluate_rsma(couplings, alloc, 1.0).sum_rate;
    // Random probes may at most squeeze past the lattice by a discretization
    // sliver, never substantially.
    CHECK(rate <= best.sum_rate * 1.05);
  }
}

TEST_CASE("grid guards reject oversized searches") {
  const auto three_users = random_couplings(3, 2, 11);
  GridSpec grid;
  grid.levels = 5;
  grid.total_power = 1.0;
  CHECK_THROWS_AS(
      grid_search_best(three_users, OracleScheme::rsma, grid, 1.0),
      std::invalid_argument);

  const auto couplings = random_couplings(2, 2, 12);
  GridSpec huge;
  huge.levels = 3000;
  huge.total_power = 1.0;
  CHECK_THROWS_AS(grid_search_best(couplings, OracleScheme::rsma, huge, 1.0),
                  std::invalid_argument);
  GridSpec degenerate;
  degenerate.levels = 1;
  CHECK_THROWS_AS(
      grid_search_best(couplings, OracleScheme::noma, degenerate, 1.0),
      std::invalid_argument);
}

TEST_CASE("loop decomposition trivial cases") {
  std::vector<CouplingMatrix> couplings(1);
  couplings[0].user_id = 0;
  couplings[0].g = CMatrix::Identity(3, 3);
  PowerAllocation alloc = PowerAllocation::zeros(1, 3);
  alloc.common << 1.0, 0.0, 2.0;
  alloc.private_powers << 0.5, 1.5, 0.0;

  const auto common = loop_power_decomposition(
      couplings, alloc, StreamKind::rsma_common, {}, 1.0, 0, 0);
  CHECK(common.signal == doctest::Approx(1.0));
  CHECK(common.ici == 0.0);
  CHECK(common.mui == doctest::Approx(0.5));  // own private on carrier 0

  const auto priv = loop_power_decomposition(
      couplings, alloc, StreamKind::rsma_private, {}, 1.0, 0, 1);
  CHECK(priv.signal == doctest::Approx(1.5));
  CHECK(priv.ici == 0.0);
  CHECK(priv.mui == 0.0);
}

TEST_CASE("default sic order places the weak user first") {
  auto couplings = random_couplings(2, 3, 13);
  couplings[0].g *= 0.1;  // make user 0 clearly weaker
  const auto order = default_sic_order(couplings);
  REQUIRE(order.size() == 2);
  CHECK(order[0] == 0);
  CHECK(order[1] == 1);

  couplings[0].g *= 100.0;  // now user 0 is stronger
  const auto flipped = default_sic_order(couplings);
  CHECK(flipped[0] == 1);
  CHECK(flipped[1] == 0);
}
