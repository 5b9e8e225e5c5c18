#include "groupanon/redistribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/LU>

namespace groupanon {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::manual: return "manual";
    case Strategy::alleged_extrema: return "alleged_extrema";
    case Strategy::extremum_transition: return "extremum_transition";
  }
  return "manual";
}

Strategy parse_strategy(const std::string& s) {
  if (s == "manual") return Strategy::manual;
  if (s == "alleged_extrema") return Strategy::alleged_extrema;
  if (s == "extremum_transition") return Strategy::extremum_transition;
  throw Error("unknown strategy '" + s + "' (expected manual, alleged_extrema or extremum_transition)");
}

std::string to_string(ExtremumKind k) { return k == ExtremumKind::maximum ? "maximum" : "minimum"; }

ExtremumKind parse_extremum_kind(const std::string& s) {
  if (s == "maximum" || s == "max") return ExtremumKind::maximum;
  if (s == "minimum" || s == "min") return ExtremumKind::minimum;
  throw Error("unknown extremum kind '" + s + "' (expected maximum or minimum)");
}

void validate_plan(const RedistributionPlan& plan) {
  if (!(plan.floor > 0.0) || !std::isfinite(plan.floor)) throw Error("floor must be a positive finite value");
  for (const auto& [idx, value] : plan.free_values) {
    if (!std::isfinite(value)) throw Error("manual coefficient values must be finite");
    if (plan.fixed_indices.count(idx)) {
      std::ostringstream msg;
      msg << "coefficient " << idx + 1 << " is both fixed and assigned a new value";
      throw Error(msg.str());
    }
  }
  if (plan.strategy != Strategy::manual && !plan.free_values.empty()) {
    throw Error("coefficient values are only accepted by the manual strategy");
  }
  if (plan.strategy == Strategy::manual && !plan.targets.empty()) {
    throw Error("extremum targets are not accepted by the manual strategy");
  }
  if (plan.fix_all && !plan.free_values.empty()) {
    throw Error("a plan that fixes every coefficient cannot assign new values");
  }
  std::set<std::size_t> seen;
  for (const auto& t : plan.targets) {
    if (!seen.insert(t.position).second) {
      std::ostringstream msg;
      msg << "duplicate extremum target at position " << t.position + 1;
      throw Error(msg.str());
    }
    if (t.value && !std::isfinite(*t.value)) throw Error("extremum target values must be finite");
  }
}

std::set<std::size_t> fixed_border_indices(const ReconstructionMatrix& m, const ExtensionMeta& meta) {
  std::set<std::size_t> out;
  const std::size_t n = m.rows();
  if (meta.direction == ExtensionDirection::none || n < 2) return out;
  const std::size_t r0 = meta.direction == ExtensionDirection::left ? 0 : n - 2;
  // Products of taps for level > 1 may leave rounding dust in structural zeros.
  constexpr double kZero = 1e-12;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    if (std::abs(m.entries(r0, c)) > kZero || std::abs(m.entries(r0 + 1, c)) > kZero) out.insert(c);
  }
  return out;
}

std::vector<Extremum> find_local_extrema(std::span<const double> values, std::size_t begin,
                                         std::size_t end) {
  std::vector<Extremum> out;
  end = std::min(end, values.size());
  if (end <= begin + 1) return out;
  for (std::size_t i = begin; i < end; ++i) {
    const bool has_left = i > begin;
    const bool has_right = i + 1 < end;
    const double v = values[i];
    const bool above = (!has_left || v > values[i - 1]) && (!has_right || v > values[i + 1]);
    const bool below = (!has_left || v < values[i - 1]) && (!has_right || v < values[i + 1]);
    if (above) out.push_back({i, ExtremumKind::maximum});
    if (below) out.push_back({i, ExtremumKind::minimum});
  }
  return out;
}

namespace {

using EigenMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const EigenMatrix> view(const Matrix& m) {
  return {m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

// Solves a x = b by complete-pivot LU. Throws when a is singular at tol.
std::vector<double> solve_dense(const EigenMatrix& a, std::span<const double> b, double tol) {
  Eigen::FullPivLU<EigenMatrix> lu(a);
  lu.setThreshold(tol);
  if (!lu.isInvertible()) throw Error("linear system is singular");
  const Eigen::VectorXd x = lu.solve(Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())));
  return {x.data(), x.data() + x.size()};
}

// Minimum-norm correction dx with h*dx = r.
std::vector<double> min_norm_step(const Matrix& h, std::span<const double> r, double tol) {
  if (h.rows() == 0) return std::vector<double>(h.cols(), 0.0);
  return h.apply_transposed(solve_dense(view(h) * view(h).transpose(), r, tol));
}

}  // namespace

std::size_t matrix_rank(const Matrix& a, double tol) {
  if (a.rows() == 0 || a.cols() == 0) return 0;
  Eigen::FullPivLU<EigenMatrix> lu(view(a));
  lu.setThreshold(tol);
  return static_cast<std::size_t>(lu.rank());
}

std::vector<double> solve_targets(const Matrix& hard_rows, std::span<const double> hard_rhs,
                                  const Matrix& soft_rows, std::span<const double> soft_rhs,
                                  std::span<const double> x0, double rank_tol) {
  const std::size_t f = x0.size();
  if (hard_rows.rows() > 0 && hard_rows.cols() != f) throw Error("hard target rows have wrong width");
  if (soft_rows.rows() > 0 && soft_rows.cols() != f) throw Error("soft target rows have wrong width");
  if (hard_rows.rows() != hard_rhs.size() || soft_rows.rows() != soft_rhs.size()) {
    throw Error("target rows and values differ in count");
  }

  const std::size_t h = hard_rows.rows();
  if (h > 0) {
    const std::size_t rank = matrix_rank(hard_rows, rank_tol);
    if (rank < h) {
      std::ostringstream msg;
      msg << "infeasible targets: " << h << " targets but only " << rank
          << " independent directions among " << f << " free coefficients (rank deficiency "
          << h - rank << ")";
      throw Error(msg.str());
    }
  }

  std::vector<double> x(x0.begin(), x0.end());
  if (h > 0) {
    std::vector<double> r(hard_rhs.begin(), hard_rhs.end());
    const auto hx = hard_rows.apply(x);
    for (std::size_t i = 0; i < h; ++i) r[i] -= hx[i];
    const auto dx = min_norm_step(hard_rows, r, rank_tol);
    for (std::size_t i = 0; i < f; ++i) x[i] += dx[i];
  }
  if (soft_rows.rows() == 0 || f == 0) return x;

  // Soft targets move x only inside the null space of the hard rows:
  // x = x_p + P z with P = I - H^T (H H^T)^-1 H.
  Matrix proj = Matrix::identity(f);
  if (h > 0) {
    for (std::size_t j = 0; j < f; ++j) {
      std::vector<double> col(h);
      for (std::size_t i = 0; i < h; ++i) col[i] = hard_rows(i, j);
      const auto p = min_norm_step(hard_rows, col, rank_tol);
      for (std::size_t i = 0; i < f; ++i) proj(i, j) -= p[i];
    }
  }
  const Matrix sp = soft_rows * proj;
  std::vector<double> rs(soft_rhs.begin(), soft_rhs.end());
  const auto sx = soft_rows.apply(x);
  for (std::size_t i = 0; i < rs.size(); ++i) rs[i] -= sx[i];

  constexpr double kRidge = 1e-8;
  Matrix normal = sp.transposed() * sp;
  for (std::size_t i = 0; i < f; ++i) normal(i, i) += kRidge;
  const auto z = solve_dense(view(normal), sp.apply_transposed(rs), 1e-15);
  const auto dz = proj.apply(z);
  for (std::size_t i = 0; i < f; ++i) x[i] += dz[i];

  if (h > 0) {
    // Re-project so the hard targets hold to rounding.
    std::vector<double> r(hard_rhs.begin(), hard_rhs.end());
    const auto hx = hard_rows.apply(x);
    for (std::size_t i = 0; i < h; ++i) r[i] -= hx[i];
    const auto dx = min_norm_step(hard_rows, r, rank_tol);
    for (std::size_t i = 0; i < f; ++i) x[i] += dx[i];
  }
  return x;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

bool row_has_free_influence(const Matrix& m, std::size_t row, const std::set<std::size_t>& free) {
  for (std::size_t c : free)
    if (std::abs(m(row, c)) > 1e-12) return true;
  return false;
}

bool is_strict_extremum(std::span<const double> v, std::size_t p, ExtremumKind kind) {
  const auto beats = [&](std::size_t q) {
    return kind == ExtremumKind::maximum ? v[p] > v[q] : v[p] < v[q];
  };
  return (p == 0 || beats(p - 1)) && (p + 1 >= v.size() || beats(p + 1));
}

}  // namespace

CoefficientChoice make_coefficients(const RedistributionPlan& plan, const DecompositionResult& dec,
                                    const ReconstructionMatrix& m) {
  validate_plan(plan);
  const std::size_t count = dec.approx.size();
  const std::size_t n = count << dec.level;
  if (m.cols() != count || m.rows() != n) {
    throw Error("reconstruction matrix does not match the decomposition");
  }

  CoefficientChoice out;
  out.coefficients = dec.approx;
  out.fixed = fixed_border_indices(m, dec.meta);
  const auto check_index = [&](std::size_t idx) {
    if (idx >= count) {
      std::ostringstream msg;
      msg << "coefficient index " << idx + 1 << " out of range 1.." << count;
      throw Error(msg.str());
    }
  };
  for (std::size_t idx : plan.fixed_indices) {
    check_index(idx);
    out.fixed.insert(idx);
  }
  if (plan.fix_all)
    for (std::size_t i = 0; i < count; ++i) out.fixed.insert(i);

  if (plan.strategy == Strategy::manual) {
    for (const auto& [idx, value] : plan.free_values) {
      check_index(idx);
      if (out.fixed.count(idx)) {
        std::ostringstream msg;
        msg << "coefficient " << idx + 1 << " must stay fixed to keep the extension border valid";
        throw Error(msg.str());
      }
      out.coefficients[idx] = value;
      out.free.insert(idx);
    }
    for (std::size_t i = 0; i < count; ++i)
      if (!out.free.count(i)) out.fixed.insert(i);
    return out;
  }

  for (std::size_t i = 0; i < count; ++i)
    if (!out.fixed.count(i)) out.free.insert(i);

  const Matrix& mat = m.entries;
  const Signal approx = mat.apply(dec.approx);
  const std::size_t ib = dec.meta.direction == ExtensionDirection::none ? 0 : dec.meta.informative_begin();
  const std::size_t ie = dec.meta.direction == ExtensionDirection::none ? n : dec.meta.informative_end();
  const auto [lo_it, hi_it] = std::minmax_element(approx.begin() + static_cast<long>(ib),
                                                  approx.begin() + static_cast<long>(ie));
  const double lo = *lo_it, hi = *hi_it;
  double span = hi - lo;
  if (!(span > 0.0)) span = std::abs(hi) > 0.0 ? std::abs(hi) : 1.0;

  std::set<std::size_t> hard_positions;
  for (const auto& t : plan.targets) {
    if (t.position >= n) {
      std::ostringstream msg;
      msg << "target position " << t.position + 1 << " out of range 1.." << n;
      throw Error(msg.str());
    }
    const double value =
        t.value.value_or(t.kind == ExtremumKind::maximum ? hi + span : lo - span);
    out.targets.push_back({t.position, value, true});
    hard_positions.insert(t.position);
  }
  if (plan.strategy == Strategy::extremum_transition) {
    const double flat = median(std::vector<double>(approx.begin() + static_cast<long>(ib),
                                                   approx.begin() + static_cast<long>(ie)));
    for (const auto& e : find_local_extrema(approx, ib, ie)) {
      if (hard_positions.count(e.position)) continue;
      if (!row_has_free_influence(mat, e.position, out.free)) continue;
      out.targets.push_back({e.position, flat, false});
    }
  }
  if (out.targets.empty()) return out;
  if (out.free.empty()) throw Error("infeasible targets: every coefficient is fixed");

  const std::vector<std::size_t> free_cols(out.free.begin(), out.free.end());
  std::size_t hard_count = 0;
  for (const auto& t : out.targets) hard_count += t.hard ? 1 : 0;
  Matrix hard(hard_count, free_cols.size()), soft(out.targets.size() - hard_count, free_cols.size());
  std::vector<double> hard_rhs, soft_rhs;
  for (const auto& t : out.targets) {
    double fixed_part = 0.0;
    for (std::size_t c : out.fixed) fixed_part += mat(t.position, c) * dec.approx[c];
    Matrix& dst = t.hard ? hard : soft;
    auto& rhs = t.hard ? hard_rhs : soft_rhs;
    const std::size_t row = rhs.size();
    for (std::size_t k = 0; k < free_cols.size(); ++k) dst(row, k) = mat(t.position, free_cols[k]);
    rhs.push_back(t.value - fixed_part);
  }
  std::vector<double> x0;
  for (std::size_t c : free_cols) x0.push_back(dec.approx[c]);
  const auto x = solve_targets(hard, hard_rhs, soft, soft_rhs, x0);
  for (std::size_t k = 0; k < free_cols.size(); ++k) out.coefficients[free_cols[k]] = x[k];

  const Signal fresh = mat.apply(out.coefficients);
  for (const auto& t : plan.targets) {
    if (!is_strict_extremum(fresh, t.position, t.kind)) {
      std::ostringstream msg;
      msg << "target at position " << t.position + 1 << " did not become a local " << to_string(t.kind)
          << " of the new approximation; choose a more extreme value";
      throw Error(msg.str());
    }
  }
  return out;
}

RedistributionResult redistribute(std::span<const double> c, const RedistributionPlan& plan,
                                  const WaveletFilterPair& f, int level,
                                  ExtensionDirection direction) {
  require_finite(c, "concentration signal");
  for (double v : c)
    if (v < 0.0 || v > 1.0) throw Error("concentration signal values must lie in [0, 1]");

  RedistributionResult res;
  res.original = extend_to_even(c, direction);
  res.decomposition = analyze(res.original, f, level);
  const std::size_t n = res.original.signal.size();
  res.wrm = build_wrm(f, n, level);
  res.choice = make_coefficients(plan, res.decomposition, res.wrm);

  res.approximation = apply_wrm(res.wrm, res.decomposition.approx);
  res.new_approximation = apply_wrm(res.wrm, res.choice.coefficients);
  res.combined = res.new_approximation;
  for (int u = 1; u <= level; ++u) {
    const Signal d = synth_detail(res.decomposition.details[static_cast<std::size_t>(u - 1)], f, u, n);
    for (std::size_t i = 0; i < n; ++i) res.combined[i] += d[i];
  }
  require_finite(res.combined, "recombined signal");

  const double low = *std::min_element(res.combined.begin(), res.combined.end());
  res.record.shift = plan.shift_enabled ? std::max(0.0, plan.floor - low) : 0.0;
  res.shifted = res.combined;
  for (double& v : res.shifted) v += res.record.shift;

  const ExtensionMeta& meta = res.original.meta;
  res.record.informative_begin = meta.informative_begin();
  res.record.informative_end = meta.informative_end();
  const auto b = res.original.signal.begin() + static_cast<long>(meta.informative_begin());
  const auto e = res.original.signal.begin() + static_cast<long>(meta.informative_end());
  const double sum_original = std::accumulate(b, e, 0.0);
  const double sum_shifted =
      std::accumulate(res.shifted.begin() + static_cast<long>(meta.informative_begin()),
                      res.shifted.begin() + static_cast<long>(meta.informative_end()), 0.0);
  if (sum_shifted == 0.0) throw Error("degenerate signal: shifted informative sum is zero");
  res.record.scale = sum_original / sum_shifted;
  if (!std::isfinite(res.record.scale) || !(res.record.scale > 0.0)) {
    throw Error("degenerate signal: rescaling factor is not finite and positive");
  }

  res.final_extended = res.shifted;
  for (double& v : res.final_extended) v *= res.record.scale;
  require_finite(res.final_extended, "final signal");
  res.final_signal = informative_part(res.final_extended, meta);
  return res;
}

bool OutcomeReport::passed(double tol) const {
  return std::abs(mean_delta) < tol && max_detail_residual < tol && positive && border_equal;
}

OutcomeReport verify_outcome(std::span<const double> original_extended,
                             std::span<const double> final_extended, const WaveletFilterPair& f,
                             int level, const ExtensionMeta& meta, std::optional<double> gamma) {
  if (original_extended.size() != final_extended.size()) throw Error("signals differ in length");
  if (original_extended.size() != meta.extended_length) throw Error("signal does not match extension metadata");

  const auto before = analyze(original_extended, f, level);
  const auto after = analyze(final_extended, f, level);

  OutcomeReport rep;
  if (gamma) {
    rep.gamma = *gamma;
  } else {
    double num = 0.0, den = 0.0;
    for (std::size_t u = 0; u < before.details.size(); ++u)
      for (std::size_t i = 0; i < before.details[u].size(); ++i) {
        num += after.details[u][i] * before.details[u][i];
        den += before.details[u][i] * before.details[u][i];
      }
    rep.gamma = den > 0.0 ? num / den : 1.0;
  }
  for (std::size_t u = 0; u < before.details.size(); ++u)
    for (std::size_t i = 0; i < before.details[u].size(); ++i)
      rep.max_detail_residual = std::max(
          rep.max_detail_residual, std::abs(after.details[u][i] - rep.gamma * before.details[u][i]));

  const std::size_t ib = meta.informative_begin(), ie = meta.informative_end();
  double sum_before = 0.0, sum_after = 0.0;
  for (std::size_t i = ib; i < ie; ++i) {
    sum_before += original_extended[i];
    sum_after += final_extended[i];
  }
  rep.mean_delta = (sum_after - sum_before) / static_cast<double>(ie - ib);
  rep.positive = std::all_of(final_extended.begin(), final_extended.end(), [](double v) { return v > 0.0; });

  constexpr double kBorderTol = 1e-9;
  const std::size_t n = final_extended.size();
  switch (meta.direction) {
    case ExtensionDirection::left:
      rep.border_equal = std::abs(final_extended[0] - final_extended[1]) <= kBorderTol;
      break;
    case ExtensionDirection::right:
      rep.border_equal = std::abs(final_extended[n - 1] - final_extended[n - 2]) <= kBorderTol;
      break;
    case ExtensionDirection::none:
      rep.border_equal = true;
      break;
  }
  rep.extrema_before = find_local_extrema(original_extended, ib, ie);
  rep.extrema_after = find_local_extrema(final_extended, ib, ie);
  return rep;
}

}  // namespace groupanon
