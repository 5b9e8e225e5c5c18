#include "groupanon/wrm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace groupanon {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

std::vector<double> Matrix::apply(std::span<const double> x) const {
  if (x.size() != cols_) throw Error("matrix-vector dimension mismatch");
  std::vector<double> y(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols_; ++c) acc += (*this)(r, c) * x[c];
    y[r] = acc;
  }
  return y;
}

std::vector<double> Matrix::apply_transposed(std::span<const double> y) const {
  if (y.size() != rows_) throw Error("matrix-vector dimension mismatch");
  std::vector<double> x(cols_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) x[c] += (*this)(r, c) * y[r];
  return x;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols_ != b.rows_) throw Error("matrix product dimension mismatch");
  Matrix out(a.rows_, b.cols_);
  for (std::size_t r = 0; r < a.rows_; ++r)
    for (std::size_t k = 0; k < a.cols_; ++k) {
      const double v = a(r, k);
      if (v == 0.0) continue;
      for (std::size_t c = 0; c < b.cols_; ++c) out(r, c) += v * b(k, c);
    }
  return out;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw Error("matrix sum dimension mismatch");
  Matrix out = a;
  for (std::size_t i = 0; i < out.data_.size(); ++i) out.data_[i] += b.data_[i];
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error("matrix shape mismatch");
  double worst = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) worst = std::max(worst, std::abs(a(r, c) - b(r, c)));
  return worst;
}

Matrix circulant_synthesis(std::span<const double> taps, std::size_t n) {
  if (n == 0 || n % 2 != 0) throw Error("synthesis matrix needs an even, positive row count");
  // Reuse the filter-bank step column by column so both forms share one
  // phase convention.
  const std::size_t m = n / 2;
  Matrix out(n, m);
  std::vector<double> unit(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    unit[j] = 1.0;
    const Signal col = upsample_convolve(unit, taps);
    for (std::size_t r = 0; r < n; ++r) out(r, j) = col[r];
    unit[j] = 0.0;
  }
  return out;
}

namespace {

void require_divisible(std::size_t n, int level) {
  if (level < 1) throw Error("reconstruction level must be >= 1");
  if (n == 0 || n % (std::size_t{1} << level) != 0) {
    std::ostringstream msg;
    msg << "length " << n << " is not divisible by 2^" << level << "; maximum admissible level is "
        << max_level(n);
    throw Error(msg.str());
  }
}

}  // namespace

ReconstructionMatrix build_wrm(const WaveletFilterPair& f, std::size_t n, int level) {
  require_divisible(n, level);
  Matrix m = circulant_synthesis(f.lowpass, n);
  for (int step = 1; step < level; ++step) m = m * circulant_synthesis(f.lowpass, n >> step);
  return {std::move(m), level, f};
}

ReconstructionMatrix build_detail_synthesis_matrix(const WaveletFilterPair& f, std::size_t n,
                                                   int level) {
  require_divisible(n, level);
  Matrix m = Matrix::identity(n);
  for (int step = 0; step + 1 < level; ++step) m = m * circulant_synthesis(f.lowpass, n >> step);
  m = m * circulant_synthesis(f.highpass, n >> (level - 1));
  return {std::move(m), level, f};
}

Signal apply_wrm(const ReconstructionMatrix& m, std::span<const double> coeffs) {
  return m.entries.apply(coeffs);
}

std::vector<std::string> dump_matrix_rows(const Matrix& m) {
  std::vector<std::string> rows;
  rows.reserve(m.rows());
  char buf[64];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::string line;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c > 0) line += ' ';
      const double v = m(r, c);
      if (v == 0.0) {
        line += '0';
      } else {
        std::snprintf(buf, sizeof buf, "%.4f", v);
        line += buf;
      }
    }
    rows.push_back(std::move(line));
  }
  return rows;
}

std::string dump_matrix(const Matrix& m) {
  std::string out;
  for (const auto& row : dump_matrix_rows(m)) {
    out += row;
    out += '\n';
  }
  return out;
}

}  // namespace groupanon
