#pragma once

// Microfile ingestion, concentration-signal extraction and rewriting.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "groupanon/wavelet.hpp"

namespace groupanon {

// Records x attributes table of categorical values. Columns are stored
// dictionary-encoded; codes are stable for the lifetime of the object.
class Microfile {
 public:
  Microfile() = default;
  explicit Microfile(std::vector<std::string> attributes);

  const std::vector<std::string>& attributes() const { return attributes_; }
  std::size_t attribute_count() const { return attributes_.size(); }
  std::size_t record_count() const { return records_; }

  std::optional<std::size_t> find_attribute(std::string_view name) const;
  // Throws Error("unknown attribute '<name>'").
  std::size_t attribute_index(std::string_view name) const;

  const std::string& value(std::size_t record, std::size_t attribute) const {
    return dictionaries_[attribute][columns_[attribute][record]];
  }
  std::uint32_t code(std::size_t record, std::size_t attribute) const {
    return columns_[attribute][record];
  }
  std::optional<std::uint32_t> lookup(std::size_t attribute, std::string_view value) const;
  std::uint32_t intern(std::size_t attribute, std::string_view value);

  void set_value(std::size_t record, std::size_t attribute, std::string_view value);
  void add_record(std::span<const std::string_view> values);
  void add_record(std::span<const std::string> values);
  void reserve(std::size_t records);

  // Value equality: same header and the same cell strings in every record.
  friend bool operator==(const Microfile& a, const Microfile& b);

 private:
  std::vector<std::string> attributes_;
  std::vector<std::vector<std::uint32_t>> columns_;
  std::vector<std::vector<std::string>> dictionaries_;
  std::vector<std::unordered_map<std::string, std::uint32_t>> index_;
  std::size_t records_ = 0;
};

struct CsvOptions {
  char delimiter = ',';
  // When set, each listed attribute must appear in the header.
  std::vector<std::string> required_attributes;
};

Microfile load_microfile(std::istream& in, const CsvOptions& opts = {});
Microfile load_microfile(const std::filesystem::path& path, const CsvOptions& opts = {});

// Fields containing the delimiter, a quote or a line break are quoted with
// doubled inner quotes; everything else is written verbatim.
void write_microfile(const Microfile& mf, std::ostream& out, char delimiter = ',');
void write_microfile(const Microfile& mf, const std::filesystem::path& path, char delimiter = ',');

// Splits one delimited line, honouring double-quoted fields.
std::vector<std::string> split_delimited(std::string_view line, char delimiter);

struct DenominatorRule {
  enum class Kind { group_total, custom_filter };
  Kind kind = Kind::group_total;
  // custom_filter: records count towards the group only when this attribute
  // takes one of these values.
  std::string attribute;
  std::vector<std::string> values;
};

struct AttributeSpec {
  std::vector<std::string> vital_attributes;
  std::vector<std::vector<std::string>> vital_combinations;
  std::string parameter_attribute;
  std::vector<std::string> parameter_values;  // order defines signal order
  DenominatorRule denominator;
  // Vital-attribute values given to records that stop being vital. Required
  // only when some count decreases.
  std::vector<std::string> fallback;

  // Every attribute the spec touches, for header validation.
  std::vector<std::string> referenced_attributes() const;
};

void validate_spec(const AttributeSpec& spec, const Microfile& mf);

struct ConcentrationSignal {
  std::vector<std::string> parameter_values;
  std::vector<std::int64_t> numerators;
  std::vector<std::int64_t> denominators;
  Signal ratios;
};

ConcentrationSignal concentration_signal(const Microfile& mf, const AttributeSpec& spec);

struct Quantities {
  std::vector<std::int64_t> counts;
  double mean = 0.0;
};

// counts[i] = ratio[i] * denominator[i], rounded half away from zero.
Quantities new_quantities(std::span<const double> ratios, std::span<const std::int64_t> denominators);

// Returns a copy in which each parameter group holds exactly new_counts
// vital records. Only vital-attribute cells change. Record selection is a
// deterministic function of the seed.
Microfile rewrite_microfile(const Microfile& mf, const AttributeSpec& spec,
                            std::span<const std::int64_t> old_counts,
                            std::span<const std::int64_t> new_counts, std::uint64_t seed);

}  // namespace groupanon
