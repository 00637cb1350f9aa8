#include <doctest.h>

#include <cmath>

#include "floodrisknet/autodiff.hpp"
#include "floodrisknet/errors.hpp"
#include "floodrisknet/matrix.hpp"
#include "floodrisknet/rng.hpp"
#include "support/gradcheck.hpp"

using namespace frn;
using frn::testing::gradcheck;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

Matrix random_positive(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = 0.2 + rng.uniform();
  return m;
}

}  // namespace

TEST_CASE("sum gradient is all ones") {
  Parameter x("x", Matrix::from_rows({{1, 2}, {3, 4}}));
  Tape tape;
  Var loss = tape.sum(tape.param(x));
  x.zero_grad();
  tape.backward(loss);
  for (std::size_t i = 0; i < x.grad.size(); ++i) CHECK(x.grad.data()[i] == 1.0);
}

TEST_CASE("mean squared error gradient matches closed form") {
  Rng rng(5);
  Parameter x("x", random_matrix(3, 4, rng));
  const Matrix c = random_matrix(3, 4, rng);
  Tape tape;
  Var diff = tape.sub(tape.param(x), tape.constant(c));
  Var loss = tape.mean(tape.hadamard(diff, diff));
  x.zero_grad();
  tape.backward(loss);
  for (std::size_t i = 0; i < x.grad.size(); ++i) {
    const double expected = 2.0 * (x.value.data()[i] - c.data()[i]) / 12.0;
    CHECK(x.grad.data()[i] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("backward rejects non-scalar loss") {
  Parameter x("x", Matrix(2, 2, 1.0));
  Tape tape;
  Var v = tape.relu(tape.param(x));
  CHECK_THROWS_AS(tape.backward(v), std::invalid_argument);
}

TEST_CASE("shared parameter accumulates gradient from both uses") {
  Parameter x("x", Matrix::from_rows({{2}}));
  Tape tape;
  Var v = tape.param(x);
  Var loss = tape.sum(tape.hadamard(v, v));  // x^2
  x.zero_grad();
  tape.backward(loss);
  CHECK(x.grad(0, 0) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("finite differences: matmul/add/sub/scale/transpose chain") {
  Rng rng(7);
  Parameter a("a", random_matrix(3, 4, rng));
  Parameter b("b", random_matrix(4, 2, rng));
  Parameter c("c", random_matrix(3, 2, rng));
  const Matrix shift = random_matrix(3, 2, rng);
  const Matrix probe = random_matrix(2, 3, rng);
  auto build = [&](Tape& t) {
    Var prod = t.matmul(t.param(a), t.param(b));
    Var mixed = t.add(t.scale(prod, 1.7), t.sub(t.param(c), t.constant(shift)));
    return t.sum(t.hadamard(t.transpose(mixed), t.constant(probe)));
  };
  const auto res = gradcheck({&a, &b, &c}, build);
  CHECK_MESSAGE(res.ok, res.first_failure);
}

TEST_CASE("finite differences: relu") {
  Rng rng(9);
  Parameter x("x", random_matrix(4, 5, rng));
  auto build = [&](Tape& t) { return t.sum(t.relu(t.param(x))); };
  const auto res = gradcheck({&x}, build);
  CHECK_MESSAGE(res.ok, res.first_failure);
}

TEST_CASE("finite differences: row_l2_normalize") {
  Rng rng(13);
  Parameter x("x", random_matrix(4, 3, rng));
  const Matrix probe = random_matrix(4, 3, rng);
  auto build = [&](Tape& t) {
    return t.sum(t.hadamard(t.row_l2_normalize(t.param(x)), t.constant(probe)));
  };
  const auto res = gradcheck({&x}, build);
  CHECK_MESSAGE(res.ok, res.first_failure);
}

TEST_CASE("finite differences: row_softmax") {
  Rng rng(15);
  Parameter x("x", random_matrix(4, 4, rng));
  const Matrix probe = random_matrix(4, 4, rng);
  auto build = [&](Tape& t) {
    return t.sum(t.hadamard(t.row_softmax(t.param(x)), t.constant(probe)));
  };
  const auto res = gradcheck({&x}, build);
  CHECK_MESSAGE(res.ok, res.first_failure);
}

TEST_CASE("finite differences: add_row_broadcast") {
  Rng rng(19);
  Parameter x("x", random_matrix(3, 4, rng));
  Parameter b("b", random_matrix(1, 4, rng));
  const Matrix probe = random_matrix(3, 4, rng);
  auto build = [&](Tape& t) {
    return t.sum(t.hadamard(t.add_row_broadcast(t.param(x), t.param(b)), t.constant(probe)));
  };
  const auto res = gradcheck({&x, &b}, build);
  CHECK_MESSAGE(res.ok, res.first_failure);
}

TEST_CASE("finite differences: cross_cosine") {
  Rng rng(21);
  Parameter a("a", random_matrix(4, 3, rng));
  Parameter b("b", random_matrix(5, 3, rng));
  const Matrix probe = random_matrix(4, 5, rng);
  auto build = [&](Tape& t) {
    return t.sum(t.hadamard(t.cross_cosine(t.param(a), t.param(b)), t.constant(probe)));
  };
  const auto res = gradcheck({&a, &b}, build);
  CHECK_MESSAGE(res.ok, res.first_failure);
}

TEST_CASE("finite differences: normalize_adjacency") {
  Rng rng(23);
  Parameter a("a", random_positive(5, 5, rng));  // nonnegative keeps degrees positive
  const Matrix probe = random_matrix(5, 5, rng);
  auto build = [&](Tape& t) {
    return t.sum(t.hadamard(t.normalize_adjacency(t.param(a)), t.constant(probe)));
  };
  const auto res = gradcheck({&a}, build);
  CHECK_MESSAGE(res.ok, res.first_failure);
}

TEST_CASE("finite differences: pairwise_sqdist and student_t_kernel") {
  Rng rng(25);
  Parameter h("h", random_matrix(5, 3, rng));
  Parameter u("u", random_matrix(2, 3, rng));
  const Matrix probe = random_matrix(5, 2, rng);
  auto build = [&](Tape& t) {
    Var d = t.pairwise_sqdist(t.param(h), t.param(u));
    return t.sum(t.hadamard(t.student_t_kernel(d, 1.0, 1.0), t.constant(probe)));
  };
  const auto res = gradcheck({&h, &u}, build);
  CHECK_MESSAGE(res.ok, res.first_failure);
}

TEST_CASE("finite differences: row_normalize_sum") {
  Rng rng(27);
  Parameter x("x", random_positive(4, 3, rng));
  const Matrix probe = random_matrix(4, 3, rng);
  auto build = [&](Tape& t) {
    return t.sum(t.hadamard(t.row_normalize_sum(t.param(x)), t.constant(probe)));
  };
  const auto res = gradcheck({&x}, build);
  CHECK_MESSAGE(res.ok, res.first_failure);
}

TEST_CASE("finite differences: row_logsumexp and diag_as_col") {
  Rng rng(29);
  Parameter x("x", random_matrix(4, 4, rng));
  const Matrix probe = random_matrix(4, 1, rng);
  auto build = [&](Tape& t) {
    Var v = t.sub(t.row_logsumexp(t.param(x)), t.diag_as_col(t.param(x)));
    return t.sum(t.hadamard(v, t.constant(probe)));
  };
  const auto res = gradcheck({&x}, build);
  CHECK_MESSAGE(res.ok, res.first_failure);
}

TEST_CASE("finite differences: kl_div") {
  Rng rng(31);
  Matrix p = random_positive(3, 3, rng);
  // normalize rows of p so it is a distribution
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < p.cols(); ++j) s += p(i, j);
    for (std::size_t j = 0; j < p.cols(); ++j) p(i, j) /= s;
  }
  Parameter q("q", random_positive(3, 3, rng));
  auto build = [&](Tape& t) { return t.kl_div(p, t.row_normalize_sum(t.param(q))); };
  const auto res = gradcheck({&q}, build);
  CHECK_MESSAGE(res.ok, res.first_failure);
}

TEST_CASE("kl_div errors on zero q where p positive") {
  const Matrix p = Matrix::from_rows({{1.0, 0.0}});
  Matrix q(1, 2);
  q(0, 0) = 0.0;
  q(0, 1) = 1.0;
  Tape tape;
  CHECK_THROWS_AS(tape.kl_div(p, tape.constant(q)), NumericError);
  // zero p entries contribute nothing even with zero q there
  const Matrix p2 = Matrix::from_rows({{0.0, 1.0}});
  Tape tape2;
  CHECK(tape2.scalar(tape2.kl_div(p2, tape2.constant(q))) == doctest::Approx(0.0));
}

TEST_CASE("random three-layer composite vs finite differences") {
  // product -> relu -> softmax -> KL against a fixed target
  Rng rng(33);
  Parameter w1("w1", random_matrix(6, 5, rng));
  Parameter w2("w2", random_matrix(5, 4, rng));
  const Matrix x = random_matrix(3, 6, rng);
  Matrix target = random_positive(3, 4, rng);
  for (std::size_t i = 0; i < target.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < target.cols(); ++j) s += target(i, j);
    for (std::size_t j = 0; j < target.cols(); ++j) target(i, j) /= s;
  }
  auto build = [&](Tape& t) {
    Var h = t.relu(t.matmul(t.constant(x), t.param(w1)));
    Var z = t.row_softmax(t.matmul(h, t.param(w2)));
    return t.kl_div(target, z);
  };
  const auto res = gradcheck({&w1, &w2}, build);
  CHECK_MESSAGE(res.ok, res.first_failure);
}
