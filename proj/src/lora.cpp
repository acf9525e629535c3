#include "reqforge/lora.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "reqforge/error.hpp"

namespace reqforge::lora {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols())
      throw Error(ErrorCode::ShapeMismatch, "row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                                                " entries, expected " + std::to_string(m.cols()));
    std::copy(rows[r].begin(), rows[r].end(), &m(r, 0));
  }
  return m;
}

namespace {

std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

void same_shape(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorCode::ShapeMismatch, "shape " + shape(a) + " vs " + shape(b));
}

}  // namespace

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw Error(ErrorCode::ShapeMismatch, "cannot multiply " + shape(a) + " by " + shape(b));
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  same_shape(a, b);
  Matrix out = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) += b(i, j);
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  same_shape(a, b);
  Matrix out = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) -= b(i, j);
  return out;
}

Matrix operator*(double s, const Matrix& m) {
  Matrix out = m;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) *= s;
  return out;
}

void LoraFactors::validate() const {
  if (base.rows() == 0 || base.cols() == 0) throw Error(ErrorCode::ShapeMismatch, "base matrix is empty");
  if (down.rows() != base.rows())
    throw Error(ErrorCode::ShapeMismatch, "down is " + shape(down) + " but base is " + shape(base));
  if (up.cols() != base.cols())
    throw Error(ErrorCode::ShapeMismatch, "up is " + shape(up) + " but base is " + shape(base));
  if (down.cols() != up.rows())
    throw Error(ErrorCode::ShapeMismatch, "down " + shape(down) + " and up " + shape(up) + " disagree on rank");
  if (rank() == 0 || rank() > std::min(base.rows(), base.cols()))
    throw Error(ErrorCode::ShapeMismatch, "rank " + std::to_string(rank()) + " outside [1, min(A, B)]");
  for (const Matrix* m : {&base, &down, &up})
    for (double v : m->data())
      if (!std::isfinite(v)) throw Error(ErrorCode::Validation, "non-finite matrix entry");
}

Matrix delta(const LoraFactors& f) {
  f.validate();
  return f.down * f.up;
}

Matrix merge(const LoraFactors& f) { return f.base + delta(f); }

Matrix read_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      if (row.empty() && tok[0] == '#') break;
      try {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        row.push_back(v);
      } catch (const std::exception&) {
        throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": not a number: '" + tok + "'");
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  return Matrix::from_rows(rows);
}

Matrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "file not found: " + path);
  try {
    return read_matrix(in);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

void write_matrix(std::ostream& out, const Matrix& m) {
  out << std::setprecision(17);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

}  // namespace reqforge::lora
