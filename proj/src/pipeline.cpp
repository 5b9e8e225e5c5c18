#include "groupanon/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "groupanon/wrm.hpp"

namespace groupanon {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void expect_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw Error(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw Error("unknown key '" + key + "' in " + where);
    }
  }
}

std::string as_string(const json& v, const std::string& what) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw Error(what + " must be a string");
}

std::vector<std::string> as_string_list(const json& v, const std::string& what) {
  std::vector<std::string> out;
  if (v.is_array()) {
    for (const auto& e : v) out.push_back(as_string(e, what));
  } else {
    out.push_back(as_string(v, what));
  }
  return out;
}

std::size_t one_based(const json& v, const std::string& what) {
  long long i = 0;
  if (v.is_number_integer()) {
    i = v.get<long long>();
  } else if (v.is_string()) {
    try {
      std::size_t used = 0;
      i = std::stoll(v.get<std::string>(), &used);
      if (used != v.get<std::string>().size()) throw Error("");
    } catch (...) {
      throw Error(what + " must be an integer index");
    }
  } else {
    throw Error(what + " must be an integer index");
  }
  if (i < 1) throw Error(what + " indices are 1-based");
  return static_cast<std::size_t>(i - 1);
}

double as_number(const json& v, const std::string& what) {
  if (!v.is_number()) throw Error(what + " must be a number");
  return v.get<double>();
}

fs::path resolve(const fs::path& base, const json& v, const std::string& what) {
  fs::path p = as_string(v, what);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

AttributeSpec parse_attributes(const json& j) {
  expect_keys(j, {"vital", "vital_combinations", "parameter", "parameter_values", "denominator", "fallback"},
              "attributes");
  AttributeSpec spec;
  if (!j.contains("vital")) throw Error("attributes.vital is required");
  spec.vital_attributes = as_string_list(j["vital"], "attributes.vital");
  if (!j.contains("vital_combinations")) throw Error("attributes.vital_combinations is required");
  const json& combos = j["vital_combinations"];
  if (!combos.is_array()) throw Error("attributes.vital_combinations must be an array");
  for (const auto& c : combos) spec.vital_combinations.push_back(as_string_list(c, "vital combination"));
  if (!j.contains("parameter")) throw Error("attributes.parameter is required");
  spec.parameter_attribute = as_string(j["parameter"], "attributes.parameter");
  if (!j.contains("parameter_values")) throw Error("attributes.parameter_values is required");
  spec.parameter_values = as_string_list(j["parameter_values"], "attributes.parameter_values");
  if (j.contains("denominator")) {
    const json& d = j["denominator"];
    if (d.is_string()) {
      if (d.get<std::string>() != "group_total") throw Error("denominator must be group_total or a filter object");
    } else {
      expect_keys(d, {"rule", "attribute", "values"}, "attributes.denominator");
      const std::string rule = d.value("rule", "custom_filter");
      if (rule == "group_total") {
        spec.denominator.kind = DenominatorRule::Kind::group_total;
      } else if (rule == "custom_filter") {
        spec.denominator.kind = DenominatorRule::Kind::custom_filter;
        if (!d.contains("attribute") || !d.contains("values")) {
          throw Error("custom_filter denominator needs attribute and values");
        }
        spec.denominator.attribute = as_string(d["attribute"], "denominator.attribute");
        spec.denominator.values = as_string_list(d["values"], "denominator.values");
      } else {
        throw Error("unknown denominator rule '" + rule + "'");
      }
    }
  }
  if (j.contains("fallback")) spec.fallback = as_string_list(j["fallback"], "attributes.fallback");
  return spec;
}

ExtremumTarget parse_target(const json& t) {
  expect_keys(t, {"position", "kind", "value"}, "plan.targets[]");
  if (!t.contains("position")) throw Error("target needs a position");
  ExtremumTarget out;
  out.position = one_based(t["position"], "target position");
  if (t.contains("kind")) out.kind = parse_extremum_kind(as_string(t["kind"], "target kind"));
  if (t.contains("value") && !t["value"].is_null()) out.value = as_number(t["value"], "target value");
  return out;
}

RedistributionPlan parse_plan(const json& j) {
  expect_keys(j, {"strategy", "fixed", "coefficients", "targets", "floor", "shift"}, "plan");
  RedistributionPlan plan;
  if (j.contains("strategy")) plan.strategy = parse_strategy(as_string(j["strategy"], "plan.strategy"));
  if (j.contains("fixed")) {
    const json& f = j["fixed"];
    if (f.is_string() && f.get<std::string>() == "all") {
      plan.fix_all = true;
    } else if (f.is_array()) {
      for (const auto& i : f) plan.fixed_indices.insert(one_based(i, "plan.fixed"));
    } else {
      throw Error("plan.fixed must be a list of 1-based indices or \"all\"");
    }
  }
  if (j.contains("coefficients")) {
    const json& c = j["coefficients"];
    if (c.is_object()) {
      for (const auto& [k, v] : c.items()) plan.free_values[one_based(json(k), "plan.coefficients")] = as_number(v, "coefficient value");
    } else if (c.is_array()) {
      for (const auto& pair : c) {
        if (!pair.is_array() || pair.size() != 2) throw Error("plan.coefficients entries must be [index, value]");
        plan.free_values[one_based(pair[0], "plan.coefficients")] = as_number(pair[1], "coefficient value");
      }
    } else {
      throw Error("plan.coefficients must be an object or a list of pairs");
    }
  }
  if (j.contains("targets")) {
    if (!j["targets"].is_array()) throw Error("plan.targets must be an array");
    for (const auto& t : j["targets"]) plan.targets.push_back(parse_target(t));
  }
  if (j.contains("floor")) plan.floor = as_number(j["floor"], "plan.floor");
  if (j.contains("shift")) {
    if (!j["shift"].is_boolean()) throw Error("plan.shift must be true or false");
    plan.shift_enabled = j["shift"].get<bool>();
  }
  validate_plan(plan);
  return plan;
}

json one_based_list(const std::set<std::size_t>& s) {
  json out = json::array();
  for (std::size_t i : s) out.push_back(i + 1);
  return out;
}

json extrema_json(const std::vector<Extremum>& ex, const ExtensionMeta& meta,
                  const std::vector<std::string>& labels) {
  json out = json::array();
  for (const auto& e : ex) {
    json item = {{"position", e.position + 1}, {"kind", to_string(e.kind)}};
    const std::size_t informative = e.position - meta.informative_begin();
    if (e.position >= meta.informative_begin() && informative < labels.size()) {
      item["parameter_value"] = labels[informative];
    }
    out.push_back(std::move(item));
  }
  return out;
}

json meta_json(const ExtensionMeta& m) {
  return {{"direction", to_string(m.direction)},
          {"original_length", m.original_length},
          {"extended_length", m.extended_length}};
}

// Only vital-attribute cells may differ; everything else must match exactly.
bool conserved(const Microfile& before, const Microfile& after, const AttributeSpec& spec) {
  if (before.attributes() != after.attributes() || before.record_count() != after.record_count()) return false;
  std::set<std::string> vital(spec.vital_attributes.begin(), spec.vital_attributes.end());
  for (std::size_t c = 0; c < before.attribute_count(); ++c) {
    if (vital.count(before.attributes()[c])) continue;
    for (std::size_t r = 0; r < before.record_count(); ++r)
      if (before.value(r, c) != after.value(r, c)) return false;
  }
  return true;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error("failed to write '" + path.string() + "'");
}

Microfile load_for(const RunConfig& config, const fs::path& path) {
  CsvOptions opts;
  opts.delimiter = config.delimiter;
  opts.required_attributes = config.attributes.referenced_attributes();
  return load_microfile(path, opts);
}

std::vector<double> ratios_of(std::span<const std::int64_t> counts, std::span<const std::int64_t> den) {
  std::vector<double> out(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    out[i] = static_cast<double>(counts[i]) / static_cast<double>(den[i]);
  return out;
}

}  // namespace

WaveletFilterPair RunConfig::filters() const {
  if (!custom_lowpass.empty()) return make_filter_pair(custom_lowpass);
  return filter_by_name(wavelet);
}

RunConfig parse_run_config(const json& j, const fs::path& base_dir) {
  expect_keys(j, {"input", "output", "report", "plot", "delimiter", "attributes", "wavelet", "plan", "seed"},
              "config");
  RunConfig cfg;
  if (!j.contains("input")) throw Error("config.input is required");
  cfg.input = resolve(base_dir, j["input"], "config.input");
  if (j.contains("output")) cfg.output = resolve(base_dir, j["output"], "config.output");
  if (j.contains("report")) cfg.report = resolve(base_dir, j["report"], "config.report");
  if (j.contains("plot")) cfg.plot = resolve(base_dir, j["plot"], "config.plot");
  if (j.contains("delimiter")) {
    const std::string d = as_string(j["delimiter"], "config.delimiter");
    if (d.size() != 1 || d[0] == '"' || d[0] == '\n') throw Error("delimiter must be a single character");
    cfg.delimiter = d[0];
  }
  if (!j.contains("attributes")) throw Error("config.attributes is required");
  cfg.attributes = parse_attributes(j["attributes"]);
  if (j.contains("wavelet")) {
    const json& w = j["wavelet"];
    expect_keys(w, {"name", "lowpass", "level", "extension"}, "wavelet");
    if (w.contains("name")) cfg.wavelet = as_string(w["name"], "wavelet.name");
    if (w.contains("lowpass")) {
      for (const auto& v : w["lowpass"]) cfg.custom_lowpass.push_back(as_number(v, "wavelet.lowpass"));
    }
    if (w.contains("level")) {
      if (!w["level"].is_number_integer() || w["level"].get<int>() < 1) throw Error("wavelet.level must be >= 1");
      cfg.level = w["level"].get<int>();
    }
    if (w.contains("extension")) cfg.extension = parse_extension(as_string(w["extension"], "wavelet.extension"));
  }
  if (j.contains("plan")) cfg.plan = parse_plan(j["plan"]);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) throw Error("seed must be an integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  cfg.filters();  // reject bad wavelets early
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

void apply_overrides(RunConfig& config, const Overrides& o) {
  if (o.seed) config.seed = *o.seed;
  if (o.output) config.output = *o.output;
  if (o.report) config.report = *o.report;
}

json error_report(const std::string& message) { return {{"status", "error"}, {"error", message}}; }

std::string plot_dump(std::span<const double> before, std::span<const double> after) {
  if (before.size() != after.size()) throw Error("plot series differ in length");
  std::string out = "index\tbefore\tafter\n";
  char buf[96];
  for (std::size_t i = 0; i < before.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu\t%.17g\t%.17g\n", i + 1, before[i], after[i]);
    out += buf;
  }
  return out;
}

RunOutcome run_anonymize(const RunConfig& config) {
  RunOutcome out;
  fs::path report_path = config.report;
  if (report_path.empty() && !config.output.empty()) report_path = fs::path(config.output.string() + ".report.json");
  try {
    if (config.output.empty()) throw Error("an output path is required");
    const AttributeSpec& spec = config.attributes;
    const Microfile mf = load_for(config, config.input);
    validate_spec(spec, mf);
    const ConcentrationSignal cs = concentration_signal(mf, spec);
    const WaveletFilterPair f = config.filters();

    const RedistributionResult res = redistribute(cs.ratios, config.plan, f, config.level, config.extension);
    const ExtensionMeta& meta = res.original.meta;
    const OutcomeReport check =
        verify_outcome(res.original.signal, res.final_extended, f, config.level, meta, res.record.scale);

    const Quantities q = new_quantities(res.final_signal, cs.denominators);
    const Microfile rewritten = rewrite_microfile(mf, spec, cs.numerators, q.counts, config.seed);
    const ConcentrationSignal recount = concentration_signal(rewritten, spec);
    const bool recount_ok = recount.numerators == q.counts && recount.denominators == cs.denominators;
    const bool conservation_ok = conserved(mf, rewritten, spec);

    const auto rounded = extend_to_even(ratios_of(q.counts, cs.denominators), config.extension);
    const OutcomeReport after_rounding =
        verify_outcome(res.original.signal, rounded.signal, f, config.level, meta, res.record.scale);

    const bool passed = check.passed() && recount_ok && conservation_ok;
    out.exit_code = passed ? kSuccess : kInvariantViolation;

    json details = json::array();
    for (const auto& d : res.decomposition.details) details.push_back(d);
    json targets = json::array();
    for (const auto& t : res.choice.targets)
      targets.push_back({{"position", t.position + 1}, {"value", t.value}, {"hard", t.hard}});

    const double old_mean =
        static_cast<double>(std::accumulate(cs.numerators.begin(), cs.numerators.end(), std::int64_t{0})) /
        static_cast<double>(cs.numerators.size());

    json& r = out.report;
    r["status"] = passed ? "ok" : "invariant_violation";
    r["parameter_attribute"] = spec.parameter_attribute;
    r["parameter_values"] = spec.parameter_values;
    r["wavelet"] = {{"lowpass", f.lowpass}, {"highpass", f.highpass}, {"level", config.level}};
    r["extension"] = meta_json(meta);
    r["strategy"] = to_string(config.plan.strategy);
    r["signal"] = {{"original", cs.ratios},
                   {"extended", res.original.signal},
                   {"approx_coefficients", res.decomposition.approx},
                   {"details", details},
                   {"new_coefficients", res.choice.coefficients},
                   {"approximation", res.approximation},
                   {"new_approximation", res.new_approximation},
                   {"combined", res.combined},
                   {"shifted", res.shifted},
                   {"final_extended", res.final_extended},
                   {"final", res.final_signal}};
    r["fixed_indices"] = one_based_list(res.choice.fixed);
    r["free_indices"] = one_based_list(res.choice.free);
    r["targets"] = targets;
    r["shift"] = res.record.shift;
    r["scale"] = res.record.scale;
    r["counts"] = {{"denominators", cs.denominators},
                   {"old", cs.numerators},
                   {"new", q.counts},
                   {"old_mean", old_mean},
                   {"new_mean", q.mean}};
    r["checks"] = {{"mean_delta", check.mean_delta},
                   {"max_detail_residual", check.max_detail_residual},
                   {"positive", check.positive},
                   {"border_equal", check.border_equal},
                   {"recount_matches", recount_ok},
                   {"conservation", conservation_ok},
                   {"rounded_mean_delta", after_rounding.mean_delta},
                   {"rounded_detail_residual", after_rounding.max_detail_residual}};
    r["extrema"] = {{"before", extrema_json(check.extrema_before, meta, spec.parameter_values)},
                    {"after", extrema_json(check.extrema_after, meta, spec.parameter_values)}};
    r["seed"] = config.seed;

    write_microfile(rewritten, config.output, config.delimiter);
    write_text(report_path, r.dump(2) + "\n");
    const fs::path plot = config.plot.empty() ? fs::path(report_path).replace_extension(".plot.tsv") : config.plot;
    write_text(plot, plot_dump(cs.ratios, res.final_signal));
  } catch (const std::exception& e) {
    out.exit_code = kHardError;
    out.report = error_report(e.what());
    if (!report_path.empty()) {
      try {
        write_text(report_path, out.report.dump(2) + "\n");
      } catch (const std::exception&) {
        // The caller still gets the report in memory.
      }
    }
  }
  return out;
}

RunOutcome run_inspect(const RunConfig& config) {
  RunOutcome out;
  try {
    const AttributeSpec& spec = config.attributes;
    const Microfile mf = load_for(config, config.input);
    const ConcentrationSignal cs = concentration_signal(mf, spec);
    const WaveletFilterPair f = config.filters();
    const Extended ext = extend_to_even(cs.ratios, config.extension);
    const DecompositionResult dec = analyze(ext, f, config.level);
    const ReconstructionMatrix m = build_wrm(f, ext.signal.size(), config.level);

    json details = json::array();
    for (const auto& d : dec.details) details.push_back(d);
    json& r = out.report;
    r["status"] = "ok";
    r["parameter_attribute"] = spec.parameter_attribute;
    r["parameter_values"] = spec.parameter_values;
    r["numerators"] = cs.numerators;
    r["denominators"] = cs.denominators;
    r["signal"] = cs.ratios;
    r["extension"] = meta_json(ext.meta);
    r["extended_signal"] = ext.signal;
    r["level"] = config.level;
    r["approx_coefficients"] = dec.approx;
    r["details"] = details;
    r["approximation"] = apply_wrm(m, dec.approx);
    r["wrm"] = dump_matrix_rows(m.entries);
    r["fixed_indices"] = one_based_list(fixed_border_indices(m, ext.meta));
  } catch (const std::exception& e) {
    out.exit_code = kHardError;
    out.report = error_report(e.what());
  }
  return out;
}

RunOutcome run_verify(const RunConfig& config) {
  RunOutcome out;
  try {
    if (config.output.empty()) throw Error("an output path is required");
    const AttributeSpec& spec = config.attributes;
    const Microfile before = load_for(config, config.input);
    const Microfile after = load_for(config, config.output);
    const ConcentrationSignal cs0 = concentration_signal(before, spec);
    const ConcentrationSignal cs1 = concentration_signal(after, spec);
    const WaveletFilterPair f = config.filters();
    const Extended e0 = extend_to_even(cs0.ratios, config.extension);
    const Extended e1 = extend_to_even(cs1.ratios, config.extension);
    const OutcomeReport check = verify_outcome(e0.signal, e1.signal, f, config.level, e0.meta);

    const bool conservation_ok = conserved(before, after, spec);
    const bool denominators_ok = cs0.denominators == cs1.denominators;
    const bool passed = conservation_ok && denominators_ok && check.positive;
    out.exit_code = passed ? kSuccess : kInvariantViolation;

    json& r = out.report;
    r["status"] = passed ? "ok" : "invariant_violation";
    r["parameter_values"] = spec.parameter_values;
    r["counts"] = {{"denominators", cs0.denominators}, {"old", cs0.numerators}, {"new", cs1.numerators}};
    r["signal"] = {{"before", cs0.ratios}, {"after", cs1.ratios}};
    r["checks"] = {{"conservation", conservation_ok},
                   {"denominators_unchanged", denominators_ok},
                   {"positive", check.positive},
                   {"mean_delta", check.mean_delta},
                   {"fitted_scale", check.gamma},
                   {"max_detail_residual", check.max_detail_residual}};
    r["extrema"] = {{"before", extrema_json(check.extrema_before, e0.meta, spec.parameter_values)},
                    {"after", extrema_json(check.extrema_after, e0.meta, spec.parameter_values)}};
  } catch (const std::exception& e) {
    out.exit_code = kHardError;
    out.report = error_report(e.what());
  }
  return out;
}

}  // namespace groupanon
