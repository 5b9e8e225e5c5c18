#include "groupanon/wavelet.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace groupanon {

namespace {

// Position of tap 0 relative to 2j for coefficient j.
constexpr long kPhase = -1;

std::size_t wrap(long i, std::size_t n) {
  const long m = static_cast<long>(n);
  return static_cast<std::size_t>(((i % m) + m) % m);
}

Signal downsample_correlate(std::span<const double> s, std::span<const double> taps) {
  const std::size_t half = s.size() / 2;
  Signal out(half, 0.0);
  for (std::size_t j = 0; j < half; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < taps.size(); ++i) {
      acc += taps[i] * s[wrap(2 * static_cast<long>(j) + kPhase + static_cast<long>(i), s.size())];
    }
    out[j] = acc;
  }
  return out;
}

void require_level_fits(std::size_t n, int level) {
  if (level < 1) throw Error("decomposition level must be >= 1");
  if (n % (std::size_t{1} << level) != 0) {
    std::ostringstream msg;
    msg << "signal length " << n << " is not divisible by 2^" << level
        << "; maximum admissible level is " << max_level(n);
    throw Error(msg.str());
  }
}

}  // namespace

void require_finite(std::span<const double> s, const char* what) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s[i])) {
      std::ostringstream msg;
      msg << what << ": non-finite value at index " << i;
      throw Error(msg.str());
    }
  }
}

void validate_filter(const WaveletFilterPair& f, double tol) {
  const auto& l = f.lowpass;
  const std::size_t t = l.size();
  if (t == 0 || t % 2 != 0) throw Error("filter length must be even and positive");
  if (f.highpass.size() != t) throw Error("low-pass and high-pass lengths differ");
  const double sum = std::accumulate(l.begin(), l.end(), 0.0);
  if (std::abs(sum - std::sqrt(2.0)) > tol) throw Error("low-pass taps must sum to sqrt(2)");
  for (std::size_t shift = 0; shift < t; shift += 2) {
    double dot = 0.0;
    for (std::size_t i = 0; i + shift < t; ++i) dot += l[i] * l[i + shift];
    const double expect = shift == 0 ? 1.0 : 0.0;
    if (std::abs(dot - expect) > tol) {
      throw Error("low-pass taps are not orthonormal under even shifts");
    }
  }
  for (std::size_t i = 0; i < t; ++i) {
    const double mirror = (i % 2 == 0 ? 1.0 : -1.0) * l[t - 1 - i];
    if (std::abs(f.highpass[i] - mirror) > tol) {
      throw Error("high-pass is not the quadrature mirror of the low-pass");
    }
  }
}

WaveletFilterPair make_filter_pair(std::vector<double> lowpass) {
  require_finite(lowpass, "low-pass taps");
  WaveletFilterPair f;
  const std::size_t t = lowpass.size();
  f.highpass.resize(t);
  for (std::size_t i = 0; i < t; ++i) {
    f.highpass[i] = (i % 2 == 0 ? 1.0 : -1.0) * lowpass[t - 1 - i];
  }
  f.lowpass = std::move(lowpass);
  validate_filter(f);
  return f;
}

WaveletFilterPair db2_filter() {
  const double r3 = std::sqrt(3.0);
  const double norm = 4.0 * std::sqrt(2.0);
  return make_filter_pair({(1 + r3) / norm, (3 + r3) / norm, (3 - r3) / norm, (1 - r3) / norm});
}

WaveletFilterPair haar_filter() {
  const double v = 1.0 / std::sqrt(2.0);
  return make_filter_pair({v, v});
}

WaveletFilterPair filter_by_name(const std::string& name) {
  if (name == "db2") return db2_filter();
  if (name == "haar" || name == "db1") return haar_filter();
  throw Error("unknown wavelet '" + name + "' (expected db2 or haar)");
}

std::string to_string(ExtensionDirection d) {
  switch (d) {
    case ExtensionDirection::left: return "left";
    case ExtensionDirection::right: return "right";
    case ExtensionDirection::none: return "none";
  }
  return "none";
}

ExtensionDirection parse_extension(const std::string& s) {
  if (s == "left") return ExtensionDirection::left;
  if (s == "right") return ExtensionDirection::right;
  if (s == "none") return ExtensionDirection::none;
  throw Error("unknown extension direction '" + s + "' (expected left or right)");
}

Extended extend_to_even(std::span<const double> s, ExtensionDirection direction) {
  if (s.size() < 2) throw Error("signal must have at least 2 samples");
  require_finite(s, "signal");
  Extended out;
  out.meta.original_length = s.size();
  out.signal.assign(s.begin(), s.end());
  if (s.size() % 2 == 0 || direction == ExtensionDirection::none) {
    if (s.size() % 2 != 0) throw Error("odd-length signal needs a left or right extension");
    out.meta.direction = ExtensionDirection::none;
  } else if (direction == ExtensionDirection::left) {
    out.signal.insert(out.signal.begin(), s.front());
    out.meta.direction = direction;
  } else {
    out.signal.push_back(s.back());
    out.meta.direction = direction;
  }
  out.meta.extended_length = out.signal.size();
  return out;
}

Signal informative_part(std::span<const double> extended, const ExtensionMeta& meta) {
  if (extended.size() != meta.extended_length) throw Error("signal does not match extension metadata");
  return Signal(extended.begin() + static_cast<long>(meta.informative_begin()),
                extended.begin() + static_cast<long>(meta.informative_end()));
}

LevelCoefficients analyze_once(std::span<const double> s, const WaveletFilterPair& f) {
  if (s.size() % 2 != 0) throw Error("signal must be extended to even length first");
  if (s.empty()) throw Error("signal is empty");
  return {downsample_correlate(s, f.lowpass), downsample_correlate(s, f.highpass)};
}

int max_level(std::size_t n) {
  int k = 0;
  while (n > 0 && n % 2 == 0) {
    n /= 2;
    ++k;
  }
  return k;
}

DecompositionResult analyze(std::span<const double> s, const WaveletFilterPair& f, int level) {
  ExtensionMeta meta;
  meta.original_length = s.size();
  meta.extended_length = s.size();
  return analyze(Extended{Signal(s.begin(), s.end()), meta}, f, level);
}

DecompositionResult analyze(const Extended& ext, const WaveletFilterPair& f, int level) {
  require_finite(ext.signal, "signal");
  require_level_fits(ext.signal.size(), level);
  DecompositionResult dec;
  dec.level = level;
  dec.filters = f;
  dec.meta = ext.meta;
  Signal current = ext.signal;
  for (int u = 1; u <= level; ++u) {
    auto step = analyze_once(current, f);
    dec.details.push_back(std::move(step.detail));
    current = std::move(step.approx);
  }
  dec.approx = std::move(current);
  return dec;
}

Signal upsample_convolve(std::span<const double> coeffs, std::span<const double> taps) {
  const std::size_t n = 2 * coeffs.size();
  Signal out(n, 0.0);
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    for (std::size_t i = 0; i < taps.size(); ++i) {
      out[wrap(2 * static_cast<long>(j) + kPhase + static_cast<long>(i), n)] += taps[i] * coeffs[j];
    }
  }
  return out;
}

Signal synth_approx(std::span<const double> approx, const WaveletFilterPair& f, int level,
                    std::size_t n) {
  if (level < 1) throw Error("synthesis level must be >= 1");
  if ((approx.size() << level) != n) {
    throw Error("approximation coefficient count does not match target length");
  }
  Signal current(approx.begin(), approx.end());
  for (int step = 0; step < level; ++step) current = upsample_convolve(current, f.lowpass);
  return current;
}

Signal synth_detail(std::span<const double> detail, const WaveletFilterPair& f, int level,
                    std::size_t n) {
  if (level < 1) throw Error("synthesis level must be >= 1");
  if ((detail.size() << level) != n) {
    throw Error("detail coefficient count does not match target length");
  }
  Signal current = upsample_convolve(detail, f.highpass);
  for (int step = 1; step < level; ++step) current = upsample_convolve(current, f.lowpass);
  return current;
}

Signal reconstruct(const DecompositionResult& dec) {
  const std::size_t n = dec.approx.size() << dec.level;
  Signal out = synth_approx(dec.approx, dec.filters, dec.level, n);
  for (int u = 1; u <= dec.level; ++u) {
    const Signal d = synth_detail(dec.details[static_cast<std::size_t>(u - 1)], dec.filters, u, n);
    for (std::size_t i = 0; i < n; ++i) out[i] += d[i];
  }
  return out;
}

}  // namespace groupanon
