#pragma once

// Independent reference computations for the tests. Nothing here calls the
// filter-bank or matrix code under test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

using Dense = std::vector<std::vector<double>>;  // row-major

inline Dense zeros(std::size_t r, std::size_t c) { return Dense(r, std::vector<double>(c, 0.0)); }

inline Dense multiply(const Dense& a, const Dense& b) {
  Dense out = zeros(a.size(), b.empty() ? 0 : b[0].size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < out[i].size(); ++j) out[i][j] += a[i][k] * b[k][j];
  return out;
}

inline Dense transpose(const Dense& a) {
  Dense out = zeros(a.empty() ? 0 : a[0].size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) out[j][i] = a[i][j];
  return out;
}

inline std::vector<double> apply(const Dense& a, const std::vector<double>& x) {
  std::vector<double> y(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) y[i] += a[i][j] * x[j];
  return y;
}

// Dyadic upsampling: coefficient j lands on sample 2j.
inline Dense upsampling(std::size_t n) {
  Dense u = zeros(n, n / 2);
  for (std::size_t j = 0; j < n / 2; ++j) u[2 * j][j] = 1.0;
  return u;
}

// Circular convolution whose tap 0 sits one sample before the input
// position: y[r] = sum_i taps[i] x[r + 1 - i].
inline Dense circular_convolution(const std::vector<double>& taps, std::size_t n) {
  Dense c = zeros(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < taps.size(); ++i) {
      const std::size_t col = (r + 1 + n * taps.size() - i) % n;
      c[r][col] += taps[i];
    }
  return c;
}

// Single synthesis stage as convolution after upsampling.
inline Dense synthesis_stage(const std::vector<double>& taps, std::size_t n) {
  return multiply(circular_convolution(taps, n), upsampling(n));
}

inline Dense approx_operator(const std::vector<double>& low, std::size_t n, int level) {
  Dense m = synthesis_stage(low, n);
  for (int s = 1; s < level; ++s) m = multiply(m, synthesis_stage(low, n >> s));
  return m;
}

inline Dense detail_operator(const std::vector<double>& low, const std::vector<double>& high, std::size_t n,
                             int level) {
  Dense m;
  for (int s = 0; s + 1 < level; ++s) m = m.empty() ? synthesis_stage(low, n >> s) : multiply(m, synthesis_stage(low, n >> s));
  const Dense h = synthesis_stage(high, n >> (level - 1));
  return m.empty() ? h : multiply(m, h);
}

inline double max_abs(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo = -1.0,
                                         double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Strict local maximum of v at p, neighbours inside [0, v.size()).
inline bool is_local_max(const std::vector<double>& v, std::size_t p) {
  return (p == 0 || v[p] > v[p - 1]) && (p + 1 >= v.size() || v[p] > v[p + 1]);
}

}  // namespace oracle
