#include "groupanon/microdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace groupanon {

Microfile::Microfile(std::vector<std::string> attributes) : attributes_(std::move(attributes)) {
  std::set<std::string> seen;
  for (const auto& a : attributes_) {
    if (!seen.insert(a).second) throw Error("duplicate attribute '" + a + "' in header");
  }
  columns_.resize(attributes_.size());
  dictionaries_.resize(attributes_.size());
  index_.resize(attributes_.size());
}

std::optional<std::size_t> Microfile::find_attribute(std::string_view name) const {
  for (std::size_t i = 0; i < attributes_.size(); ++i)
    if (attributes_[i] == name) return i;
  return std::nullopt;
}

std::size_t Microfile::attribute_index(std::string_view name) const {
  if (auto idx = find_attribute(name)) return *idx;
  throw Error("unknown attribute '" + std::string(name) + "'");
}

std::optional<std::uint32_t> Microfile::lookup(std::size_t attribute, std::string_view value) const {
  const auto& idx = index_[attribute];
  auto it = idx.find(std::string(value));
  if (it == idx.end()) return std::nullopt;
  return it->second;
}

std::uint32_t Microfile::intern(std::size_t attribute, std::string_view value) {
  auto& idx = index_[attribute];
  auto [it, inserted] = idx.try_emplace(std::string(value), static_cast<std::uint32_t>(dictionaries_[attribute].size()));
  if (inserted) dictionaries_[attribute].emplace_back(value);
  return it->second;
}

void Microfile::set_value(std::size_t record, std::size_t attribute, std::string_view value) {
  columns_[attribute][record] = intern(attribute, value);
}

void Microfile::add_record(std::span<const std::string_view> values) {
  if (values.size() != attributes_.size()) throw Error("record width does not match header");
  for (std::size_t a = 0; a < values.size(); ++a) columns_[a].push_back(intern(a, values[a]));
  ++records_;
}

void Microfile::add_record(std::span<const std::string> values) {
  std::vector<std::string_view> views(values.begin(), values.end());
  add_record(std::span<const std::string_view>(views));
}

void Microfile::reserve(std::size_t records) {
  for (auto& col : columns_) col.reserve(records);
}

bool operator==(const Microfile& a, const Microfile& b) {
  if (a.attributes_ != b.attributes_ || a.records_ != b.records_) return false;
  for (std::size_t c = 0; c < a.attributes_.size(); ++c)
    for (std::size_t r = 0; r < a.records_; ++r)
      if (a.value(r, c) != b.value(r, c)) return false;
  return true;
}

std::vector<std::string> split_delimited(std::string_view line, char delimiter) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"' && field.empty()) {
      quoted = true;
    } else if (ch == delimiter) {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  if (quoted) throw Error("unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

Microfile load_microfile(std::istream& in, const CsvOptions& opts) {
  std::string line;
  std::size_t line_no = 0;
  const auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line()) throw Error("empty file");
  Microfile mf(split_delimited(line, opts.delimiter));
  for (const auto& required : opts.required_attributes) mf.attribute_index(required);

  const std::size_t width = mf.attribute_count();
  while (next_line()) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    try {
      fields = split_delimited(line, opts.delimiter);
    } catch (const Error& e) {
      throw Error("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (fields.size() != width) {
      std::ostringstream msg;
      msg << "line " << line_no << ": expected " << width << " fields, got " << fields.size();
      throw Error(msg.str());
    }
    mf.add_record(std::span<const std::string>(fields));
  }
  if (mf.record_count() == 0) throw Error("empty file");
  return mf;
}

Microfile load_microfile(const std::filesystem::path& path, const CsvOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return load_microfile(in, opts);
}

namespace {

void write_field(std::ostream& out, const std::string& v, char delimiter) {
  const bool needs_quotes = v.find_first_of(std::string{delimiter, '"', '\n', '\r'}) != std::string::npos;
  if (!needs_quotes) {
    out << v;
    return;
  }
  out << '"';
  for (char ch : v) {
    if (ch == '"') out << '"';
    out << ch;
  }
  out << '"';
}

}  // namespace

void write_microfile(const Microfile& mf, std::ostream& out, char delimiter) {
  const auto& attrs = mf.attributes();
  for (std::size_t c = 0; c < attrs.size(); ++c) {
    if (c) out << delimiter;
    write_field(out, attrs[c], delimiter);
  }
  out << '\n';
  for (std::size_t r = 0; r < mf.record_count(); ++r) {
    for (std::size_t c = 0; c < attrs.size(); ++c) {
      if (c) out << delimiter;
      write_field(out, mf.value(r, c), delimiter);
    }
    out << '\n';
  }
  if (!out) throw Error("failed to write microfile");
}

void write_microfile(const Microfile& mf, const std::filesystem::path& path, char delimiter) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_microfile(mf, out, delimiter);
  out.flush();
  if (!out) throw Error("failed to write '" + path.string() + "'");
}

std::vector<std::string> AttributeSpec::referenced_attributes() const {
  std::vector<std::string> out = vital_attributes;
  out.push_back(parameter_attribute);
  if (denominator.kind == DenominatorRule::Kind::custom_filter) out.push_back(denominator.attribute);
  return out;
}

void validate_spec(const AttributeSpec& spec, const Microfile& mf) {
  if (spec.vital_attributes.empty()) throw Error("at least one vital attribute is required");
  std::set<std::string> vital(spec.vital_attributes.begin(), spec.vital_attributes.end());
  if (vital.size() != spec.vital_attributes.size()) throw Error("vital attributes must be distinct");
  for (const auto& a : spec.referenced_attributes()) mf.attribute_index(a);
  if (vital.count(spec.parameter_attribute)) {
    throw Error("parameter attribute '" + spec.parameter_attribute + "' cannot also be vital");
  }
  if (spec.denominator.kind == DenominatorRule::Kind::custom_filter) {
    if (vital.count(spec.denominator.attribute)) {
      throw Error("denominator filter attribute '" + spec.denominator.attribute + "' cannot be vital");
    }
    if (spec.denominator.values.empty()) throw Error("denominator filter needs at least one value");
  }
  if (spec.vital_combinations.empty()) throw Error("at least one vital value combination is required");
  for (const auto& combo : spec.vital_combinations) {
    if (combo.size() != spec.vital_attributes.size()) {
      throw Error("each vital combination needs one value per vital attribute");
    }
  }
  if (spec.parameter_values.empty()) throw Error("at least one parameter value is required");
  std::set<std::string> params(spec.parameter_values.begin(), spec.parameter_values.end());
  if (params.size() != spec.parameter_values.size()) throw Error("parameter values must be distinct");
  if (!spec.fallback.empty()) {
    if (spec.fallback.size() != spec.vital_attributes.size()) {
      throw Error("fallback needs one value per vital attribute");
    }
    for (const auto& combo : spec.vital_combinations)
      if (combo == spec.fallback) throw Error("fallback values must not form a vital combination");
  }
}

namespace {

// Resolved codes for fast per-record classification.
struct SpecIndex {
  std::vector<std::size_t> vital_cols;
  std::vector<std::vector<std::uint32_t>> combos;  // unresolvable combos dropped
  std::size_t param_col = 0;
  std::unordered_map<std::uint32_t, std::size_t> param_slot;
  std::optional<std::size_t> filter_col;
  std::set<std::uint32_t> filter_codes;

  SpecIndex(const Microfile& mf, const AttributeSpec& spec) {
    for (const auto& a : spec.vital_attributes) vital_cols.push_back(mf.attribute_index(a));
    for (const auto& combo : spec.vital_combinations) {
      std::vector<std::uint32_t> codes;
      for (std::size_t k = 0; k < combo.size(); ++k) {
        auto c = mf.lookup(vital_cols[k], combo[k]);
        if (!c) break;
        codes.push_back(*c);
      }
      if (codes.size() == combo.size()) combos.push_back(std::move(codes));
    }
    param_col = mf.attribute_index(spec.parameter_attribute);
    for (std::size_t i = 0; i < spec.parameter_values.size(); ++i)
      if (auto c = mf.lookup(param_col, spec.parameter_values[i])) param_slot.emplace(*c, i);
    if (spec.denominator.kind == DenominatorRule::Kind::custom_filter) {
      filter_col = mf.attribute_index(spec.denominator.attribute);
      for (const auto& v : spec.denominator.values)
        if (auto c = mf.lookup(*filter_col, v)) filter_codes.insert(*c);
    }
  }

  std::optional<std::size_t> group_of(const Microfile& mf, std::size_t r) const {
    auto it = param_slot.find(mf.code(r, param_col));
    if (it == param_slot.end()) return std::nullopt;
    if (filter_col && !filter_codes.count(mf.code(r, *filter_col))) return std::nullopt;
    return it->second;
  }

  bool is_vital(const Microfile& mf, std::size_t r) const {
    for (const auto& combo : combos) {
      bool match = true;
      for (std::size_t k = 0; k < combo.size() && match; ++k) match = mf.code(r, vital_cols[k]) == combo[k];
      if (match) return true;
    }
    return false;
  }
};

// Unbiased draw in [0, bound) from the 64-bit engine. The engine's output
// sequence is fixed by the standard, so selections reproduce across
// platforms.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % bound;
}

std::vector<std::size_t> choose(std::vector<std::size_t> pool, std::size_t count, std::mt19937_64& rng) {
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(bounded(rng, pool.size() - k));
    std::swap(pool[k], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

ConcentrationSignal concentration_signal(const Microfile& mf, const AttributeSpec& spec) {
  validate_spec(spec, mf);
  const SpecIndex idx(mf, spec);
  const std::size_t n = spec.parameter_values.size();
  ConcentrationSignal cs;
  cs.parameter_values = spec.parameter_values;
  cs.numerators.assign(n, 0);
  cs.denominators.assign(n, 0);
  for (std::size_t r = 0; r < mf.record_count(); ++r) {
    const auto g = idx.group_of(mf, r);
    if (!g) continue;
    ++cs.denominators[*g];
    if (idx.is_vital(mf, r)) ++cs.numerators[*g];
  }
  cs.ratios.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (cs.denominators[i] == 0) {
      throw Error("parameter value '" + spec.parameter_values[i] + "' has no records in its group");
    }
    cs.ratios[i] = static_cast<double>(cs.numerators[i]) / static_cast<double>(cs.denominators[i]);
  }
  return cs;
}

Quantities new_quantities(std::span<const double> ratios, std::span<const std::int64_t> denominators) {
  if (ratios.size() != denominators.size()) throw Error("ratios and denominators differ in length");
  require_finite(ratios, "final ratios");
  Quantities q;
  q.counts.reserve(ratios.size());
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    q.counts.push_back(std::llround(ratios[i] * static_cast<double>(denominators[i])));
  }
  if (!q.counts.empty()) {
    q.mean = static_cast<double>(std::accumulate(q.counts.begin(), q.counts.end(), std::int64_t{0})) /
             static_cast<double>(q.counts.size());
  }
  return q;
}

Microfile rewrite_microfile(const Microfile& mf, const AttributeSpec& spec,
                            std::span<const std::int64_t> old_counts,
                            std::span<const std::int64_t> new_counts, std::uint64_t seed) {
  validate_spec(spec, mf);
  const std::size_t n = spec.parameter_values.size();
  if (old_counts.size() != n || new_counts.size() != n) {
    throw Error("count arrays must have one entry per parameter value");
  }
  const SpecIndex idx(mf, spec);

  std::vector<std::vector<std::size_t>> vital(n), donors(n);
  for (std::size_t r = 0; r < mf.record_count(); ++r) {
    const auto g = idx.group_of(mf, r);
    if (!g) continue;
    (idx.is_vital(mf, r) ? vital : donors)[*g].push_back(r);
  }

  Microfile out = mf;

  std::mt19937_64 rng(seed);
  for (std::size_t g = 0; g < n; ++g) {
    const auto& pv = spec.parameter_values[g];
    if (static_cast<std::size_t>(old_counts[g]) != vital[g].size() || old_counts[g] < 0) {
      std::ostringstream msg;
      msg << "parameter value '" << pv << "': stated old count " << old_counts[g] << " but the file holds "
          << vital[g].size() << " vital records";
      throw Error(msg.str());
    }
    if (new_counts[g] < 0) throw Error("parameter value '" + pv + "': negative target count");
    const auto target = static_cast<std::size_t>(new_counts[g]);
    if (target > vital[g].size()) {
      const std::size_t need = target - vital[g].size();
      if (need > donors[g].size()) {
        std::ostringstream msg;
        msg << "insufficient donor records for parameter value '" << pv << "': need " << need << ", have "
            << donors[g].size();
        throw Error(msg.str());
      }
      std::size_t cycle = 0;
      for (std::size_t r : choose(donors[g], need, rng)) {
        const auto& combo = spec.vital_combinations[cycle++ % spec.vital_combinations.size()];
        for (std::size_t k = 0; k < combo.size(); ++k) out.set_value(r, idx.vital_cols[k], combo[k]);
      }
    } else if (target < vital[g].size()) {
      if (spec.fallback.empty()) {
        throw Error("parameter value '" + pv + "' needs fewer vital records but no fallback values are configured");
      }
      const std::size_t drop = vital[g].size() - target;
      for (std::size_t r : choose(vital[g], drop, rng))
        for (std::size_t k = 0; k < spec.fallback.size(); ++k) out.set_value(r, idx.vital_cols[k], spec.fallback[k]);
    }
  }
  return out;
}

}  // namespace groupanon
