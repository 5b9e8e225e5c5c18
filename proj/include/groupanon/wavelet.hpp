#pragma once

// Decimated orthogonal wavelet analysis/synthesis with periodic boundaries.
//
// Phase convention: a level-1 coefficient j is the inner product of the
// signal with the low-pass taps placed at positions 2j-1, 2j, ..., 2j+t-2
// (0-based, wrapped modulo n). Synthesis scatters along the same positions,
// so analysis is exactly the transpose of the synthesis operator.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace groupanon {

using Signal = std::vector<double>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WaveletFilterPair {
  std::vector<double> lowpass;
  std::vector<double> highpass;

  std::size_t taps() const { return lowpass.size(); }
};

// Builds a pair from low-pass taps, deriving the quadrature mirror
// h[i] = (-1)^i * l[t-1-i]. Throws if the taps are not an orthogonal
// low-pass filter.
WaveletFilterPair make_filter_pair(std::vector<double> lowpass);

// Throws Error describing the first violated filter invariant.
void validate_filter(const WaveletFilterPair& f, double tol = 1e-10);

WaveletFilterPair db2_filter();
WaveletFilterPair haar_filter();

// "haar"/"db1" or "db2".
WaveletFilterPair filter_by_name(const std::string& name);

enum class ExtensionDirection { left, right, none };

std::string to_string(ExtensionDirection d);
ExtensionDirection parse_extension(const std::string& s);

struct ExtensionMeta {
  ExtensionDirection direction = ExtensionDirection::none;
  std::size_t original_length = 0;
  std::size_t extended_length = 0;

  // Half-open range of the samples that carry data (excludes the duplicate).
  std::size_t informative_begin() const {
    return direction == ExtensionDirection::left ? 1 : 0;
  }
  std::size_t informative_end() const {
    return informative_begin() + original_length;
  }
};

struct Extended {
  Signal signal;
  ExtensionMeta meta;
};

// Odd-length input gets its border sample duplicated on the requested side.
// Even-length input is returned untouched with direction none.
Extended extend_to_even(std::span<const double> s,
                        ExtensionDirection direction = ExtensionDirection::left);

// Drops the duplicated sample again.
Signal informative_part(std::span<const double> extended, const ExtensionMeta& meta);

struct LevelCoefficients {
  std::vector<double> approx;
  std::vector<double> detail;
};

LevelCoefficients analyze_once(std::span<const double> s, const WaveletFilterPair& f);

struct DecompositionResult {
  int level = 0;
  std::vector<double> approx;
  std::vector<std::vector<double>> details;  // details[u-1] is level u
  WaveletFilterPair filters;
  ExtensionMeta meta;
};

// Largest k for which n is divisible by 2^k.
int max_level(std::size_t n);

// Requires s to be even length already; meta is recorded as given (or
// synthesized as "none" when omitted).
DecompositionResult analyze(std::span<const double> s, const WaveletFilterPair& f, int level);
DecompositionResult analyze(const Extended& ext, const WaveletFilterPair& f, int level);

// One synthesis step: upsample by two and circularly convolve.
Signal upsample_convolve(std::span<const double> coeffs, std::span<const double> taps);

Signal synth_approx(std::span<const double> approx, const WaveletFilterPair& f, int level,
                    std::size_t n);
Signal synth_detail(std::span<const double> detail, const WaveletFilterPair& f, int level,
                    std::size_t n);

// A_k + sum of D_u, at the extended length.
Signal reconstruct(const DecompositionResult& dec);

// Throws if any value is NaN or infinite.
void require_finite(std::span<const double> s, const char* what);

}  // namespace groupanon
