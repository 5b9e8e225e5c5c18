#pragma once

// Redistribution of a concentration signal's wavelet approximation.
//
// New approximation coefficients are chosen (by hand or by a small solver),
// synthesized through the reconstruction matrix, recombined with the
// original details, shifted to be strictly positive and finally rescaled so
// the informative samples keep their original sum. Details therefore change
// only by the common factor gamma.
//
// All indices in this API are 0-based. Configuration files and reports use
// 1-based positions.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "groupanon/wavelet.hpp"
#include "groupanon/wrm.hpp"

namespace groupanon {

enum class Strategy { manual, alleged_extrema, extremum_transition };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& s);

enum class ExtremumKind { maximum, minimum };

std::string to_string(ExtremumKind k);
ExtremumKind parse_extremum_kind(const std::string& s);

struct ExtremumTarget {
  std::size_t position = 0;  // row of the extended approximation
  ExtremumKind kind = ExtremumKind::maximum;
  // Unset: one full approximation range above the current maximum (or below
  // the current minimum).
  std::optional<double> value;
};

struct RedistributionPlan {
  Strategy strategy = Strategy::manual;
  // Extra coefficients to hold at their original values. Coefficients that
  // feed the two extension border rows are always added.
  std::set<std::size_t> fixed_indices;
  bool fix_all = false;
  // manual: new values of the free coefficients.
  std::map<std::size_t, double> free_values;
  // alleged_extrema / extremum_transition: new extrema to create.
  std::vector<ExtremumTarget> targets;
  double floor = 2.0;
  bool shift_enabled = true;
};

void validate_plan(const RedistributionPlan& plan);

// Coefficient indices whose synthesis columns touch either border row that
// the extension duplicated. Empty when no extension happened.
std::set<std::size_t> fixed_border_indices(const ReconstructionMatrix& m, const ExtensionMeta& meta);

struct Extremum {
  std::size_t position = 0;
  ExtremumKind kind = ExtremumKind::maximum;

  bool operator==(const Extremum&) const = default;
};

// Strict local extrema of values[begin, end). Range endpoints compare against
// their single in-range neighbour.
std::vector<Extremum> find_local_extrema(std::span<const double> values, std::size_t begin,
                                         std::size_t end);

struct SolvedTarget {
  std::size_t position = 0;
  double value = 0.0;
  bool hard = true;  // false for soft flattening targets
};

struct CoefficientChoice {
  std::vector<double> coefficients;  // a-hat
  std::set<std::size_t> fixed;
  std::set<std::size_t> free;
  std::vector<SolvedTarget> targets;
};

CoefficientChoice make_coefficients(const RedistributionPlan& plan, const DecompositionResult& dec,
                                    const ReconstructionMatrix& m);

// Minimum-norm move from x0 onto hard_rows*x = hard_rhs, then a ridge
// least-squares fit of the soft rows inside the null space of the hard rows.
// Throws if the hard rows are rank deficient (tolerance rank_tol).
std::vector<double> solve_targets(const Matrix& hard_rows, std::span<const double> hard_rhs,
                                  const Matrix& soft_rows, std::span<const double> soft_rhs,
                                  std::span<const double> x0, double rank_tol = 1e-10);

// Numerical rank from a completely pivoted LU.
std::size_t matrix_rank(const Matrix& a, double tol = 1e-10);

struct ShiftScaleRecord {
  double shift = 0.0;  // delta >= 0
  double scale = 1.0;  // gamma > 0
  std::size_t informative_begin = 0;
  std::size_t informative_end = 0;
};

struct RedistributionResult {
  Extended original;
  DecompositionResult decomposition;
  ReconstructionMatrix wrm;
  CoefficientChoice choice;
  Signal approximation;      // A_k
  Signal new_approximation;  // M * a-hat
  Signal combined;           // new approximation + original details
  Signal shifted;            // combined + delta
  ShiftScaleRecord record;
  Signal final_extended;
  Signal final_signal;  // informative samples only
};

RedistributionResult redistribute(std::span<const double> c, const RedistributionPlan& plan,
                                  const WaveletFilterPair& f, int level,
                                  ExtensionDirection direction = ExtensionDirection::left);

struct OutcomeReport {
  double mean_delta = 0.0;
  double gamma = 1.0;
  double max_detail_residual = 0.0;
  bool positive = false;
  bool border_equal = false;
  std::vector<Extremum> extrema_before;
  std::vector<Extremum> extrema_after;

  bool passed(double tol = 1e-9) const;
};

// Both signals at extended length. Without an explicit gamma the detail
// scale is fitted by least squares.
OutcomeReport verify_outcome(std::span<const double> original_extended,
                             std::span<const double> final_extended, const WaveletFilterPair& f,
                             int level, const ExtensionMeta& meta,
                             std::optional<double> gamma = std::nullopt);

}  // namespace groupanon
