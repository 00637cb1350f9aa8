#include "floodrisknet/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "floodrisknet/errors.hpp"

namespace frn {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw std::invalid_argument("from_rows: ragged row lengths");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

void check_finite(const Matrix& m, const char* context) {
  const double* p = m.data();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!std::isfinite(p[i])) {
      throw NumericError(std::string("non-finite value produced by ") + context);
    }
  }
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a) +
                                " vs " + shape_string(b));
  }
}

}  // namespace

std::string shape_string(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions differ, " + shape_string(a) +
                                " * " + shape_string(b));
  }
  Matrix out(a.rows(), b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* oi = out.row(i);
    const double* ai = a.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = ai[k];
      if (aik == 0.0) continue;
      const double* bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) oi[j] += aik * bk[j];
    }
  }
  check_finite(out, "matmul");
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
  check_finite(out, "add");
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "sub");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
  check_finite(out, "sub");
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.data()[i];
  check_finite(out, "hadamard");
  return out;
}

Matrix scale(const Matrix& m, double c) {
  Matrix out = m;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= c;
  check_finite(out, "scale");
  return out;
}

Matrix relu(const Matrix& m) {
  Matrix out = m;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::max(0.0, out.data()[i]);
  check_finite(out, "relu");
  return out;
}

Matrix row_l2_normalize(const Matrix& m) {
  Matrix out = m;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double sq = 0.0;
    const double* src = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) sq += src[j] * src[j];
    if (sq == 0.0) continue;  // flood-free cells stay all-zero
    const double inv = 1.0 / std::sqrt(sq);
    double* dst = out.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) dst[j] *= inv;
  }
  check_finite(out, "row_l2_normalize");
  return out;
}

Matrix row_softmax(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* src = m.row(i);
    double* dst = out.row(i);
    double mx = src[0];
    for (std::size_t j = 1; j < m.cols(); ++j) mx = std::max(mx, src[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      dst[j] = std::exp(src[j] - mx);
      sum += dst[j];
    }
    for (std::size_t j = 0; j < m.cols(); ++j) dst[j] /= sum;
  }
  check_finite(out, "row_softmax");
  return out;
}

Matrix cross_cosine(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("cross_cosine: column counts differ, " + shape_string(a) +
                                " vs " + shape_string(b));
  }
  Matrix out = matmul(row_l2_normalize(a), transpose(row_l2_normalize(b)));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = std::clamp(out.data()[i], -1.0, 1.0);
  }
  return out;
}

Matrix cosine_similarity_matrix(const Matrix& e) {
  if (e.rows() == 0) throw std::invalid_argument("cosine_similarity_matrix: empty input");
  return cross_cosine(e, e);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double mx = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mx = std::max(mx, std::abs(a.data()[i] - b.data()[i]));
  }
  return mx;
}

}  // namespace frn
