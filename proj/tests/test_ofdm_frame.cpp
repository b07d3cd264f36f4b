#include <doctest.h>

#include <random>

#include "ofdmrsma/ofdm_frame.hpp"

using namespace ofdmrsma;

TEST_CASE("dft matrix small cases") {
  const UnitaryDft f1 = build_dft_matrix(1);
  CHECK(f1.matrix(0, 0) == Complex(1.0, 0.0));

  const UnitaryDft f2 = build_dft_matrix(2);
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(f2.matrix(0, 0) - Complex(s, 0)) < 1e-15);
  CHECK(std::abs(f2.matrix(0, 1) - Complex(s, 0)) < 1e-15);
  CHECK(std::abs(f2.matrix(1, 0) - Complex(s, 0)) < 1e-15);
  CHECK(std::abs(f2.matrix(1, 1) - Complex(-s, 0)) < 1e-15);
}

TEST_CASE("dft unitarity up to 64") {
  for (int n : {1, 2, 3, 8, 16, 35, 64}) {
    const UnitaryDft dft = build_dft_matrix(n);
    const double err =
        (dft.matrix * dft.matrix.adjoint() - CMatrix::Identity(n, n)).norm();
    CHECK_MESSAGE(err < 1e-12, "n = ", n);
  }
}

TEST_CASE("cp addition copies the tail to the front") {
  const CpMatrices cp = build_cp_matrices(4, 2);
  RVector x(4);
  x << 1, 2, 3, 4;
  const RVector with_cp = cp.add * x;
  RVector expected(6);
  expected << 3, 4, 1, 2, 3, 4;
  CHECK((with_cp - expected).norm() == 0.0);
}

TEST_CASE("cp add-then-remove is the identity, exactly") {
  for (auto [n, c] : {std::pair{4, 2}, {4, 0}, {8, 3}, {35, 9}, {5, 4}}) {
    const CpMatrices cp = build_cp_matrices(n, c);
    CHECK((cp.remove * cp.add - RMatrix::Identity(n, n)).norm() == 0.0);
    CHECK(cp.add.rowwise().sum().maxCoeff() == 1.0);
    CHECK(cp.add.rowwise().sum().minCoeff() == 1.0);
  }
}

TEST_CASE("zero-length cp gives identity matrices") {
  const CpMatrices cp = build_cp_matrices(4, 0);
  CHECK((cp.add - RMatrix::Identity(4, 4)).norm() == 0.0);
  CHECK((cp.remove - RMatrix::Identity(4, 4)).norm() == 0.0);
}

TEST_CASE("cp matrices reject c >= n") {
  CHECK_THROWS_AS(build_cp_matrices(4, 4), std::invalid_argument);
  CHECK_THROWS_AS(build_cp_matrices(4, -1), std::invalid_argument);
}

TEST_CASE("ofdm config invariants") {
  const OfdmConfig cfg = OfdmConfig::make(35, 9, 60e3);
  CHECK(cfg.fs_hz == doctest::Approx(2.1e6));
  CHECK(cfg.symbol_len() == 44);
  CHECK_THROWS_AS(OfdmConfig::make(0, 0, 60e3), std::invalid_argument);
  CHECK_THROWS_AS(OfdmConfig::make(8, 8, 60e3), std::invalid_argument);

  OfdmConfig bad = cfg;
  bad.fs_hz = 1e6;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("modulate_stream zero amplitudes give the zero vector") {
  const OfdmConfig cfg = OfdmConfig::make(4, 2, 60e3);
  CVector symbols(4);
  symbols << Complex(1, 1), Complex(0, 1), Complex(-1, 0), Complex(2, -1);
  const CVector out = modulate_stream(cfg, RVector::Zero(4), symbols);
  CHECK(out.size() == 6);
  CHECK(out.norm() == 0.0);
}

TEST_CASE("modulate_stream selector case yields a column of F^H") {
  const OfdmConfig cfg = OfdmConfig::make(4, 0, 60e3);
  RVector amplitudes = RVector::Zero(4);
  amplitudes[0] = 1.0;
  CVector symbols = CVector::Zero(4);
  symbols[0] = Complex(1.0, 0.0);
  const CVector out = modulate_stream(cfg, amplitudes, symbols);
  const UnitaryDft dft = build_dft_matrix(4);
  CHECK((out - dft.matrix.adjoint().col(0)).norm() < 1e-15);
}

TEST_CASE("modulate_stream energy accounting with a cyclic prefix") {
  const OfdmConfig cfg = OfdmConfig::make(4, 2, 60e3);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  CVector symbols(4);
  for (int i = 0; i < 4; ++i) {
    symbols[i] = Complex(normal(rng), normal(rng)) / std::sqrt(2.0);
  }
  const CVector out = modulate_stream(cfg, RVector::Ones(4), symbols);

  // Direct route: A * (F^H d); the CP adds exactly the tail energy.
  const UnitaryDft dft = build_dft_matrix(4);
  const CVector time = dft.matrix.adjoint() * symbols;
  const double expected =
      time.squaredNorm() + time.tail(2).squaredNorm();
  CHECK(out.squaredNorm() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("modulate_stream is linear in the symbols") {
  const OfdmConfig cfg = OfdmConfig::make(8, 3, 60e3);
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal(0.0, 1.0);
  RVector amplitudes(8);
  CVector d1(8), d2(8);
  for (int i = 0; i < 8; ++i) {
    amplitudes[i] = std::abs(normal(rng));
    d1[i] = Complex(normal(rng), normal(rng));
    d2[i] = Complex(normal(rng), normal(rng));
  }
  const CVector lhs = modulate_stream(cfg, amplitudes, d1 + d2);
  const CVector rhs = modulate_stream(cfg, amplitudes, d1) +
                      modulate_stream(cfg, amplitudes, d2);
  CHECK((lhs - rhs).norm() < 1e-12);
}

TEST_CASE("modulate_stream rejects mismatched lengths") {
  const OfdmConfig cfg = OfdmConfig::make(4, 1, 60e3);
  CHECK_THROWS_AS(modulate_stream(cfg, RVector::Zero(3), CVector::Zero(4)),
                  std::invalid_argument);
  CHECK_THROWS_AS(modulate_stream(cfg, RVector::Zero(4), CVector::Zero(5)),
                  std::invalid_argument);
}
