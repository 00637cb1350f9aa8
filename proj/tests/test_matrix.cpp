#include <doctest.h>

#include <cmath>

#include "floodrisknet/errors.hpp"
#include "floodrisknet/matrix.hpp"
#include "floodrisknet/rng.hpp"

using namespace frn;

TEST_CASE("matmul hand oracle") {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{5}, {6}});
  const Matrix c = matmul(a, b);
  CHECK(c.rows() == 2);
  CHECK(c.cols() == 1);
  CHECK(c(0, 0) == 17.0);
  CHECK(c(1, 0) == 39.0);
}

TEST_CASE("matmul identity and annihilator") {
  Rng rng(11);
  Matrix a(4, 5);
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  CHECK(matmul(a, Matrix::identity(5)) == a);
  CHECK(matmul(Matrix::identity(4), a) == a);
  const Matrix zero(5, 3);
  const Matrix prod = matmul(a, zero);
  for (std::size_t i = 0; i < prod.size(); ++i) CHECK(prod.data()[i] == 0.0);
}

TEST_CASE("matmul rejects mismatched shapes") {
  CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 3)), std::invalid_argument);
}

TEST_CASE("relu splits signs and keeps the nonnegative cone") {
  const Matrix r = relu(Matrix::from_rows({{-1, 2}}));
  CHECK(r(0, 0) == 0.0);
  CHECK(r(0, 1) == 2.0);
  const Matrix cone = Matrix::from_rows({{0, 1, 2.5}});
  CHECK(relu(cone) == cone);
  const Matrix b = relu(Matrix::from_rows({{-0.5, 0, 0.5}}));
  CHECK(b(0, 0) == 0.0);
  CHECK(b(0, 1) == 0.0);
  CHECK(b(0, 2) == 0.5);
}

TEST_CASE("row_l2_normalize 3-4-5 triangle, fixed point, zero row") {
  const Matrix n = row_l2_normalize(Matrix::from_rows({{3, 4}}));
  CHECK(n(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(n(0, 1) == doctest::Approx(0.8).epsilon(1e-12));
  const Matrix unit = Matrix::from_rows({{0, 1}});
  CHECK(row_l2_normalize(unit) == unit);
  const Matrix zero(1, 4);
  CHECK(row_l2_normalize(zero) == zero);
}

TEST_CASE("row_softmax uniform, stability, closed form") {
  const Matrix u = row_softmax(Matrix::from_rows({{0, 0}}));
  CHECK(u(0, 0) == 0.5);
  CHECK(u(0, 1) == 0.5);
  const Matrix big = row_softmax(Matrix::from_rows({{1000, 1000}}));
  CHECK(big(0, 0) == 0.5);
  CHECK(big(0, 1) == 0.5);
  const Matrix lg = row_softmax(Matrix::from_rows({{0.0, std::log(3.0)}}));
  CHECK(lg(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(lg(0, 1) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("row_softmax rows sum to one and shift invariance is bitwise") {
  Rng rng(3);
  Matrix x(6, 5);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x.data()[i] = std::floor(rng.uniform(-8.0, 8.0));  // exactly representable shifts
  }
  const Matrix y = row_softmax(x);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < y.cols(); ++j) s += y(i, j);
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
  Matrix shifted = x;
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted.data()[i] += 1000.0;
  CHECK(row_softmax(shifted) == y);
}

TEST_CASE("cosine similarity examples") {
  const Matrix ortho = cosine_similarity_matrix(Matrix::from_rows({{1, 0}, {0, 1}}));
  CHECK(ortho(0, 1) == 0.0);
  CHECK(ortho(1, 0) == 0.0);
  const Matrix parallel = cosine_similarity_matrix(Matrix::from_rows({{1, 1}, {2, 2}}));
  CHECK(parallel(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  const Matrix angled = cosine_similarity_matrix(Matrix::from_rows({{1, 0}, {1, 1}}));
  CHECK(angled(0, 1) == doctest::Approx(0.70710678).epsilon(1e-8));
}

TEST_CASE("cosine similarity is exactly symmetric, bounded, zero-row guarded") {
  Rng rng(17);
  Matrix e(12, 7);
  for (std::size_t i = 0; i < e.size(); ++i) e.data()[i] = rng.normal();
  for (std::size_t j = 0; j < e.cols(); ++j) e(4, j) = 0.0;  // planted zero row
  const Matrix s = cosine_similarity_matrix(e);
  CHECK(max_abs_diff(s, transpose(s)) == 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s.data()[i] <= 1.0);
    CHECK(s.data()[i] >= -1.0);
  }
  for (std::size_t j = 0; j < s.cols(); ++j) {
    CHECK(s(4, j) == 0.0);
    CHECK(s(j, 4) == 0.0);
  }
  for (std::size_t i = 0; i < s.rows(); ++i) {
    if (i != 4) CHECK(s(i, i) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("public kernels reject NaN results") {
  Matrix bad(1, 2);
  bad(0, 0) = std::numeric_limits<double>::infinity();
  bad(0, 1) = -std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(add(bad, bad), NumericError);                    // inf + -inf path
  CHECK_THROWS_AS(check_finite(bad, "test"), NumericError);
}
