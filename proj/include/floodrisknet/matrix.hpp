// Dense row-major matrix of 64-bit floats plus the elementary kernels the
// pipeline is built from. All kernels are sequential with a fixed summation
// order so repeated runs are bit-identical, and every public operation
// verifies that its result is NaN/Inf free.

#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace frn {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool operator==(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Throws NumericError naming `context` if any entry is NaN or infinite.
void check_finite(const Matrix& m, const char* context);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double c);

// max(0, x) per entry; the subgradient at 0 is taken as 0.
Matrix relu(const Matrix& m);

// Scales every nonzero row to unit Euclidean norm; all-zero rows pass through.
Matrix row_l2_normalize(const Matrix& m);

// Numerically stabilized softmax per row (max subtraction before exp).
Matrix row_softmax(const Matrix& m);

// S[i][j] = cos(row_i, row_j), clamped into [-1, 1]. All-zero rows have
// similarity 0 against everything; the diagonal of nonzero rows is 1.
Matrix cosine_similarity_matrix(const Matrix& e);

// Cross cosine: C[i][j] = cos(a_i, b_j), clamped into [-1, 1].
Matrix cross_cosine(const Matrix& a, const Matrix& b);

double max_abs_diff(const Matrix& a, const Matrix& b);

std::string shape_string(const Matrix& m);

}  // namespace frn
