#pragma once

// Wavelet reconstruction matrices: the dense linear operators behind
// approximation (and detail) synthesis, A_k = M * a_k.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "groupanon/wavelet.hpp"

namespace groupanon {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const double* data() const { return data_.data(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  static Matrix identity(std::size_t n);

  Matrix transposed() const;
  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> apply_transposed(std::span<const double> y) const;

  friend Matrix operator*(const Matrix& a, const Matrix& b);
  friend Matrix operator+(const Matrix& a, const Matrix& b);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double max_abs_diff(const Matrix& a, const Matrix& b);

struct ReconstructionMatrix {
  Matrix entries;  // n x m, m = n / 2^level
  int level = 0;
  WaveletFilterPair filters;

  std::size_t rows() const { return entries.rows(); }
  std::size_t cols() const { return entries.cols(); }
};

// Single-level stride-2 circulant synthesis matrix of size n x n/2 for the
// given taps.
Matrix circulant_synthesis(std::span<const double> taps, std::size_t n);

ReconstructionMatrix build_wrm(const WaveletFilterPair& f, std::size_t n, int level);

// Maps level-u detail coefficients to D_u. Only test oracles need it.
ReconstructionMatrix build_detail_synthesis_matrix(const WaveletFilterPair& f, std::size_t n,
                                                   int level);

Signal apply_wrm(const ReconstructionMatrix& m, std::span<const double> coeffs);

// One line per row, entries fixed-point with 4 decimals, exact zeros as "0",
// separated by single spaces.
std::string dump_matrix(const Matrix& m);
std::vector<std::string> dump_matrix_rows(const Matrix& m);

}  // namespace groupanon
