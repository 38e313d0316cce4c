#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include <latentlstm/numerics.hpp>

#include "oracles.hpp"

using namespace latentlstm;

TEST_CASE("matvec") {
  CHECK(matvec(Matrix::identity(3), Vector{1, 2, 3}) == Vector{1, 2, 3});
  CHECK(matvec(Matrix(2, 3), Vector{5, 5, 5}) == Vector{0, 0});
  CHECK(matvec(Matrix{{1, 2}, {3, 4}}, Vector{1, 1}) == Vector{3, 7});
}

TEST_CASE("matvec dimension error names both shapes") {
  try {
    matvec(Matrix(2, 3), Vector{1, 2});
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find('2') != std::string::npos);
  }
}

TEST_CASE("matvec is linear") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix m(4, 5);
    for (double& x : m.span()) x = testing::uniform(rng, -1, 1);
    Vector a(5), b(5);
    for (double& x : a) x = testing::uniform(rng, -1, 1);
    for (double& x : b) x = testing::uniform(rng, -1, 1);
    const double alpha = testing::uniform(rng, -2, 2);
    const double beta = testing::uniform(rng, -2, 2);
    const Vector lhs = matvec(m, add(scale(a, alpha), scale(b, beta)));
    const Vector rhs = add(scale(matvec(m, a), alpha), scale(matvec(m, b), beta));
    for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(std::abs(lhs[i] - rhs[i]) < 1e-12);
  }
}

TEST_CASE("matvec_transposed and add_outer") {
  const Matrix m{{1, 2}, {3, 4}, {5, 6}};
  CHECK(matvec_transposed(m, Vector{1, 0, 1}) == Vector{6, 8});
  Matrix acc(2, 2);
  add_outer(acc, Vector{1, 2}, Vector{3, 4});
  CHECK(acc == Matrix{{3, 4}, {6, 8}});
  CHECK_THROWS_AS(add_outer(acc, Vector{1}, Vector{1, 2}), DimensionError);
}

TEST_CASE("elementwise kernels") {
  CHECK(sigmoid(Vector{0}) == Vector{0.5});
  CHECK(latentlstm::tanh(Vector{0}) == Vector{0});
  CHECK(hadamard(Vector{2, 3}, Vector{4, 5}) == Vector{8, 15});
  CHECK_THROWS_AS(hadamard(Vector{1}, Vector{1, 2}), DimensionError);
}

TEST_CASE("sigmoid symmetry and range") {
  for (double x = -40.0; x <= 40.0; x += 0.37) {
    CHECK(std::abs(sigmoid(x) + sigmoid(-x) - 1.0) <= 1e-15);
    CHECK(sigmoid(x) >= 0.0);
    CHECK(sigmoid(x) <= 1.0);
  }
  // Stable far into the tails.
  CHECK(sigmoid(-800.0) == 0.0);
  CHECK(sigmoid(800.0) == 1.0);
  const Vector s = sigmoid(Vector{-3, 3});
  CHECK(s[0] > 0.0);
  CHECK(s[1] < 1.0);
}

TEST_CASE("euclidean_distance") {
  CHECK(euclidean_distance(Vector{1, 2}, Vector{1, 2}) == 0.0);
  CHECK(euclidean_distance(Vector{0, 0}, Vector{3, 4}) == 5.0);
  CHECK(euclidean_distance(Vector{2.5}, Vector{-1.0}) == 3.5);
  CHECK_THROWS_AS(euclidean_distance(Vector{1}, Vector{1, 2}), DimensionError);

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    Vector a(3), b(3), c(3);
    for (auto* v : {&a, &b, &c}) {
      for (double& x : *v) x = testing::uniform(rng, -5, 5);
    }
    CHECK(euclidean_distance(a, b) == euclidean_distance(b, a));
    CHECK(euclidean_distance(a, c) <= euclidean_distance(a, b) + euclidean_distance(b, c) + 1e-12);
  }
}

TEST_CASE("external input must be finite") {
  CHECK_THROWS_AS(Vector::from_external({1.0, std::numeric_limits<double>::quiet_NaN()}),
                  NonFiniteError);
  CHECK_THROWS_AS(Matrix::from_external(1, 1, {std::numeric_limits<double>::infinity()}),
                  NonFiniteError);
  CHECK_THROWS_AS(Matrix::from_external(2, 2, {1.0}), DimensionError);
  CHECK(Vector::from_external({1.0, 2.0}) == Vector{1, 2});
}
