#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace reqforge::lora {

/// Dense row-major matrix of doubles. Desk scale only.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  /// Throws Error(ShapeMismatch) if the rows are ragged.
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& m);

/// Frozen base weights (A x B) and the low-rank factors down (A x r) and up (r x B).
struct LoraFactors {
  Matrix base;
  Matrix down;
  Matrix up;

  std::size_t rank() const { return down.cols(); }
  /// Shapes compatible, 1 <= r <= min(A, B), all entries finite.
  void validate() const;
};

/// The weight update down * up.
Matrix delta(const LoraFactors& f);

/// base + down * up. No alpha/r scaling is applied; pre-scale `up` for
/// checkpoints trained with one.
Matrix merge(const LoraFactors& f);

/// Reads a numeric grid: one row per line, entries separated by commas
/// and/or whitespace. Lines starting with '#' are ignored.
Matrix read_matrix(std::istream& in);
Matrix read_matrix_file(const std::string& path);
void write_matrix(std::ostream& out, const Matrix& m);

}  // namespace reqforge::lora
