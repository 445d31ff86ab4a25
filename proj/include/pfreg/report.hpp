#pragma once

// JSON and CSV renderings of results. Every report shares one envelope:
//
//   {"schema": "pfreg.report/1", "tool": "pfreg", "version": ..., "command": ...,
//    "config": {...}, "seed": ..., "fields": [...], "exact": ..., "generated_at": ...,
//    "result": {...}}
//
// Everything except "generated_at" is a pure function of the inputs.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pfreg/counting.hpp"
#include "pfreg/dim_measure.hpp"
#include "pfreg/field.hpp"
#include "pfreg/regularity.hpp"

namespace pfreg {

using ojson = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "pfreg.report/1";
inline constexpr const char* kToolVersion = "0.1.0";

inline const char* kSamplingNote =
    "clause (iii) is checked on sampled subsets A, B only; it is not verified for all subsets";
inline const char* kExceptionalNote =
    "exceptional pairs are the minority invariant within a block pair; agreement with any forking locus is not checked";

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline ojson field_list(const std::vector<FieldSpec>& fields) {
  ojson j = ojson::array();
  for (const auto& f : fields) j.push_back(f.descriptor());
  return j;
}

inline ojson envelope(const std::string& command, ojson config, std::uint64_t seed,
                      const std::vector<FieldSpec>& fields, bool exact) {
  ojson j;
  j["schema"] = kReportSchema;
  j["tool"] = "pfreg";
  j["version"] = kToolVersion;
  j["command"] = command;
  j["config"] = std::move(config);
  j["seed"] = seed;
  j["fields"] = field_list(fields);
  j["exact"] = exact;
  j["generated_at"] = utc_timestamp();
  return j;
}

inline ojson to_json(const DimMeasure& d) {
  ojson j;
  j["empty"] = d.is_empty();
  j["dim"] = d.dim ? ojson(*d.dim) : ojson(nullptr);
  j["measure"] = d.is_empty() ? ojson(nullptr) : ojson(d.measure.str());
  j["fit_residual"] = d.fit_residual;
  j["field_count"] = d.field_count;
  return j;
}

inline ojson to_json(const CountResult& r) {
  ojson j;
  j["field"] = r.field;
  j["q"] = r.q;
  ojson params = ojson::object();
  for (const auto& [k, v] : r.params) params[k] = v.index;
  j["params"] = params;
  j["N"] = r.count;
  return j;
}

inline ojson to_json(const Classification& c) {
  ojson j;
  j["c_fit"] = c.c_fit;
  ojson classes = ojson::array();
  for (const auto& pc : c.classes) {
    ojson k;
    k["id"] = pc.id;
    k["invariant"] = to_json(pc.invariant);
    k["label"] = pc.label ? ojson(*pc.label) : ojson(nullptr);
    k["validated"] = pc.validated;
    k["diagnostic"] = pc.diagnostic;
    ojson sizes = ojson::array();
    for (std::size_t f = 0; f < c.fields.size(); ++f) sizes.push_back(pc.size(f));
    k["sizes"] = sizes;
    classes.push_back(k);
  }
  j["classes"] = classes;
  return j;
}

inline ojson to_json(const Partition& p, const std::vector<ExceptionalDimensionCheck>& checks) {
  ojson j;
  j["n"] = p.n;
  j["exact"] = p.exact;
  ojson blocks = ojson::array();
  for (const auto& b : p.blocks) {
    ojson k;
    k["id"] = b.id;
    k["label"] = b.label ? ojson(*b.label) : ojson(nullptr);
    k["measure"] = to_json(b.measure);
    ojson sizes = ojson::array();
    for (std::size_t f = 0; f < p.fields.size(); ++f) sizes.push_back(b.size(f));
    k["sizes"] = sizes;
    blocks.push_back(k);
  }
  j["blocks"] = blocks;
  ojson pairs = ojson::array();
  for (std::size_t s = 0; s < p.summaries.size(); ++s) {
    const auto& ps = p.summaries[s];
    ojson k;
    k["i"] = ps.i;
    k["j"] = ps.j;
    k["verdict"] = to_string(ps.verdict);
    k["c"] = ps.verdict == Verdict::Constant ? ojson(ps.c.str()) : ojson(nullptr);
    k["c_fit"] = ps.c_fit;
    ojson exc = ojson::array();
    for (std::size_t f = 0; f < p.fields.size(); ++f) {
      ojson e;
      e["field"] = p.fields[f].descriptor();
      e["pairs_checked"] = ps.pairs_checked[f];
      e["exceptional_pairs"] = ps.exceptional[f].size();
      e["exceptional_fraction"] = ps.exceptional_fraction[f];
      e["exceptional_size"] = ps.exceptional_size[f];
      exc.push_back(e);
    }
    k["per_field"] = exc;
    if (s < checks.size()) {
      ojson c;
      c["pass"] = checks[s].pass;
      c["exponent"] = checks[s].exponent ? ojson(*checks[s].exponent) : ojson(nullptr);
      c["bound"] = checks[s].bound;
      c["diagnostic"] = checks[s].diagnostic;
      k["exceptional_dimension"] = c;
    }
    pairs.push_back(k);
  }
  j["block_pairs"] = pairs;
  j["note"] = kExceptionalNote;
  return j;
}

inline ojson to_json(const RegularityReport& r) {
  ojson j;
  j["samples"] = r.samples;
  j["seed"] = r.seed;
  ojson per_field = ojson::array();
  for (std::size_t f = 0; f < r.fields.size(); ++f) {
    ojson k;
    k["field"] = r.fields[f].descriptor();
    k["edges"] = r.edge_totals[f];
    k["max_normalized_deviation"] = r.max_normalized[f];
    k["min_block_fraction"] = r.min_block_fraction[f];
    per_field.push_back(k);
  }
  j["per_field"] = per_field;
  ojson entries = ojson::array();
  for (const auto& e : r.entries) {
    ojson k;
    k["field"] = r.fields[e.field].descriptor();
    k["i"] = e.i;
    k["j"] = e.j;
    k["size_v"] = e.size_v;
    k["size_w"] = e.size_w;
    k["edges"] = e.edges;
    k["density"] = e.density;
    k["max_deviation"] = e.max_deviation;
    k["normalized"] = e.normalized;
    k["clause_ratio"] = e.clause_ratio;
    entries.push_back(k);
  }
  j["block_pairs"] = entries;
  j["alpha"] = r.fit ? ojson(r.fit->exponent) : ojson(nullptr);
  j["c_emp"] = r.fit ? ojson(r.fit->coefficient) : ojson(nullptr);
  j["alpha_bound"] = r.alpha_bound;
  j["c_clause"] = r.c_clause;
  j["alpha_ok"] = r.alpha_ok;
  j["clause_ok"] = r.clause_ok;
  j["density_consistent"] = r.density_consistent;
  j["note"] = kSamplingNote;
  return j;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw InvalidArgument("cannot write '" + path.string() + "'");
    out_ << std::setprecision(17);
  }

  template <typename... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

 private:
  static std::string cell(const std::string& s) { return csv_escape(s); }
  static std::string cell(const char* s) { return csv_escape(s); }
  template <typename T>
  static std::string cell(const T& v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
  }

  std::ofstream out_;
};

inline void write_classification_csv(const std::filesystem::path& path, const Classification& c) {
  CsvWriter w(path);
  w.row("field", "q", "param_index", "params", "count", "class", "dim", "measure");
  for (std::size_t f = 0; f < c.fields.size(); ++f) {
    for (std::size_t i = 0; i < c.params[f].size(); ++i) {
      std::string tuple;
      for (auto v : c.params[f].at(i)) tuple += (tuple.empty() ? "" : " ") + std::to_string(v);
      const auto& pc = c.classes[static_cast<std::size_t>(c.class_of[f][i])];
      w.row(c.fields[f].descriptor(), c.fields[f].order(), i, tuple, c.counts[f][i], pc.id,
            pc.invariant.dim ? std::to_string(*pc.invariant.dim) : std::string("empty"),
            pc.invariant.is_empty() ? std::string("") : pc.invariant.measure.str());
    }
  }
}

inline void write_partition_csv(const std::filesystem::path& path, const Partition& p) {
  CsvWriter w(path);
  w.row("field", "q", "i", "j", "verdict", "c", "pairs_checked", "exceptional_pairs", "exceptional_fraction");
  for (const auto& s : p.summaries)
    for (std::size_t f = 0; f < p.fields.size(); ++f)
      w.row(p.fields[f].descriptor(), p.fields[f].order(), s.i, s.j, to_string(s.verdict),
            s.verdict == Verdict::Constant ? s.c.str() : std::string(""), s.pairs_checked[f], s.exceptional[f].size(),
            s.exceptional_fraction[f]);
}

inline void write_density_csv(const std::filesystem::path& path, const RegularityReport& r) {
  CsvWriter w(path);
  w.row("field", "q", "i", "j", "size_v", "size_w", "edges", "density");
  for (const auto& e : r.entries)
    w.row(r.fields[e.field].descriptor(), r.fields[e.field].order(), e.i, e.j, e.size_v, e.size_w, e.edges, e.density);
}

inline void write_deviation_csv(const std::filesystem::path& path, const RegularityReport& r) {
  CsvWriter w(path);
  w.row("field", "q", "i", "j", "max_deviation", "normalized", "clause_ratio");
  for (const auto& e : r.entries)
    w.row(r.fields[e.field].descriptor(), r.fields[e.field].order(), e.i, e.j, e.max_deviation, e.normalized,
          e.clause_ratio);
}

}  // namespace pfreg
