#pragma once

// Command-line front end: count, dim, classify, partition, verify, demo.
//
// Exit status: 0 ok, 1 a check failed, 2 configuration error, 3 budget exceeded.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pfreg/catalog.hpp"
#include "pfreg/counting.hpp"
#include "pfreg/demo.hpp"
#include "pfreg/dim_measure.hpp"
#include "pfreg/error.hpp"
#include "pfreg/field.hpp"
#include "pfreg/formula.hpp"
#include "pfreg/graph_spec.hpp"
#include "pfreg/regularity.hpp"
#include "pfreg/report.hpp"

namespace pfreg::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kConfigError = 2, kBudgetError = 3 };

struct RunConfig {
  std::string command;
  std::string formula;                // text, or a path to a file holding it
  std::vector<std::string> objects;
  std::vector<std::string> params;    // classify: parameter variables
  std::vector<std::string> bindings;  // count: "y=3"
  std::string field;                  // count
  std::vector<std::string> fields;
  std::string fields_range;           // "lo:hi[:mod=m[/r]]"
  std::string graph;
  std::string blocks;                 // verify: explicit block file
  bool trivial_partition = false;
  double max_work = 1e9;
  std::size_t pair_table_cap = 512;
  std::size_t pair_samples = 10000;
  std::size_t max_blocks = 64;
  std::optional<double> tau;
  std::int64_t max_den = 64;
  double residual_threshold = 10.0;
  double exponent_slack = 0.25;
  double alpha_slack = 0.0;
  std::optional<std::uint64_t> max_complexity;
  std::size_t samples = 100;
  std::uint64_t seed = 0;
  std::string output;   // JSON report path; empty: stdout
  std::string csv_dir;  // CSV companions; empty: none
  /// Used instead of --graph when set (tests inject hooked graphs here).
  std::optional<BipartiteDefinableGraph> graph_override;
};

/// Everything in the config that affects results (output paths excluded).
inline ojson config_json(const RunConfig& c) {
  ojson j;
  if (!c.formula.empty()) j["formula"] = c.formula;
  if (!c.objects.empty()) j["objects"] = c.objects;
  if (!c.params.empty()) j["params"] = c.params;
  if (!c.bindings.empty()) j["bindings"] = c.bindings;
  if (!c.graph.empty()) j["graph"] = c.graph;
  if (!c.blocks.empty()) j["blocks"] = c.blocks;
  if (c.trivial_partition) j["trivial_partition"] = true;
  j["max_work"] = c.max_work;
  j["pair_table_cap"] = c.pair_table_cap;
  j["pair_samples"] = c.pair_samples;
  j["max_blocks"] = c.max_blocks;
  j["tau"] = c.tau ? ojson(*c.tau) : ojson("2/sqrt(q)");
  j["max_den"] = c.max_den;
  j["residual_threshold"] = c.residual_threshold;
  j["exponent_slack"] = c.exponent_slack;
  j["alpha_slack"] = c.alpha_slack;
  j["max_complexity"] = c.max_complexity ? ojson(*c.max_complexity) : ojson(nullptr);
  j["samples"] = c.samples;
  return j;
}

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::uint64_t parse_uint(const std::string& s, const std::string& what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) throw InvalidArgument("bad " + what + " '" + s + "'");
  return v;
}

}  // namespace detail

/// "lo:hi" or "lo:hi:mod=m" (p ≡ 1 mod m) or "lo:hi:mod=m/r" (p ≡ r mod m).
inline std::vector<std::uint64_t> parse_fields_range(const std::string& text) {
  const auto parts = detail::split(text, ':');
  if (parts.size() < 2 || parts.size() > 3) throw InvalidArgument("--fields-range expects lo:hi[:mod=m[/r]], got '" + text + "'");
  const auto lo = detail::parse_uint(parts[0], "range bound"), hi = detail::parse_uint(parts[1], "range bound");
  if (lo > hi) throw InvalidArgument("--fields-range: lo > hi");
  std::optional<Congruence> filter;
  if (parts.size() == 3) {
    if (parts[2].rfind("mod=", 0) != 0) throw InvalidArgument("--fields-range: expected mod=m[/r], got '" + parts[2] + "'");
    const auto spec = parts[2].substr(4);
    const auto slash = spec.find('/');
    Congruence c;
    c.modulus = detail::parse_uint(spec.substr(0, slash), "modulus");
    c.residue = slash == std::string::npos ? 1 : detail::parse_uint(spec.substr(slash + 1), "residue");
    if (c.modulus == 0) throw InvalidArgument("--fields-range: modulus must be positive");
    filter = c;
  }
  return primes_in_range(lo, hi, filter);
}

inline std::vector<FieldSpec> resolve_fields(const RunConfig& c, std::size_t minimum) {
  if (!c.fields.empty() && !c.fields_range.empty())
    throw InvalidArgument("give either --fields or --fields-range, not both");
  std::vector<FieldSpec> out;
  for (const auto& d : c.fields) out.push_back(parse_field(d));
  if (!c.fields_range.empty())
    for (auto p : parse_fields_range(c.fields_range)) out.push_back(FieldSpec::make(p, 1));
  if (out.size() < minimum)
    throw InvalidArgument("need at least " + std::to_string(minimum) + " field(s); use --fields or --fields-range");
  return out;
}

inline std::string read_formula(const std::string& source) {
  if (source.empty()) throw InvalidArgument("--formula is required");
  std::error_code ec;
  if (std::filesystem::is_regular_file(source, ec)) {
    std::ifstream in(source);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }
  return source;
}

inline FormulaPtr load_formula(const RunConfig& c) {
  auto f = parse_formula(read_formula(c.formula));
  if (c.max_complexity && complexity(*f) > *c.max_complexity)
    throw InvalidArgument("formula complexity " + std::to_string(complexity(*f)) + " exceeds --max-complexity " +
                          std::to_string(*c.max_complexity));
  return f;
}

inline RegularityOptions regularity_options(const RunConfig& c) {
  if (c.max_work <= 0 || c.pair_table_cap == 0 || c.pair_samples == 0 || c.max_blocks == 0)
    throw InvalidArgument("budgets must be positive");
  if (c.max_den < 1) throw InvalidArgument("--max-den must be at least 1");
  if (c.tau && (*c.tau < 0 || *c.tau >= 1)) throw InvalidArgument("--tau must lie in [0, 1)");
  RegularityOptions o;
  o.count.max_work = c.max_work;
  o.estimate.max_den = c.max_den;
  o.estimate.residual_threshold = c.residual_threshold;
  o.pair_table_cap = c.pair_table_cap;
  o.pair_samples = c.pair_samples;
  o.max_blocks = c.max_blocks;
  o.tau = c.tau;
  o.exponent_slack = c.exponent_slack;
  o.alpha_slack = c.alpha_slack;
  o.seed = c.seed;
  return o;
}

struct Outcome {
  ojson report;
  std::vector<std::string> failures;
};

inline void write_report(const RunConfig& c, const ojson& report, std::ostream& out) {
  const std::string text = report.dump(2) + "\n";
  if (c.output.empty()) {
    out << text;
    return;
  }
  std::ofstream f(c.output);
  if (!f) throw InvalidArgument("cannot write '" + c.output + "'");
  f << text;
}

inline std::filesystem::path csv_path(const RunConfig& c, const std::string& name) {
  std::filesystem::create_directories(c.csv_dir);
  return std::filesystem::path(c.csv_dir) / name;
}

inline Outcome run_count(const RunConfig& c) {
  const auto set_params = [&] {
    std::vector<std::string> names;
    for (const auto& b : c.bindings) names.push_back(b.substr(0, b.find('=')));
    return names;
  }();
  if (c.objects.empty()) throw InvalidArgument("--objects is required");
  const auto s = DefinableSet::make(load_formula(c), c.objects, set_params);
  RunConfig fc = c;
  if (!c.field.empty()) fc.fields.insert(fc.fields.begin(), c.field);
  const auto fields = resolve_fields(fc, 1);
  std::vector<Binding> per_field;
  for (const auto& f : fields) {
    Binding b;
    for (const auto& text : c.bindings) {
      const auto eq = text.find('=');
      if (eq == std::string::npos) throw InvalidArgument("--params expects name=value, got '" + text + "'");
      const FieldElement e{static_cast<std::uint32_t>(std::min<std::uint64_t>(detail::parse_uint(text.substr(eq + 1), "element index"), UINT32_MAX))};
      if (!f.contains(e)) throw InvalidArgument("element index " + text.substr(eq + 1) + " is not in F_" + f.descriptor());
      b[text.substr(0, eq)] = e;
    }
    per_field.push_back(b);
  }
  CountOptions opts;
  opts.max_work = c.max_work;
  const auto results = count_sweep(s, fields, c.bindings.empty() ? std::vector<Binding>{} : per_field, opts);
  Outcome o{envelope("count", config_json(c), c.seed, fields, true), {}};
  if (results.size() == 1) {
    o.report["result"] = to_json(results.front());
  } else {
    ojson arr = ojson::array();
    for (const auto& r : results) arr.push_back(to_json(r));
    o.report["result"] = arr;
  }
  return o;
}

inline Outcome run_dim(const RunConfig& c) {
  if (c.objects.empty()) throw InvalidArgument("--objects is required");
  const auto s = DefinableSet::make(load_formula(c), c.objects);
  const auto fields = resolve_fields(c, 3);
  const auto opts = regularity_options(c);
  std::vector<CountSample> counts;
  ojson cj = ojson::array();
  for (const auto& r : count_sweep(s, fields, {}, opts.count)) {
    counts.emplace_back(r.q, r.count);
    cj.push_back(to_json(r));
  }
  Outcome o{envelope("dim", config_json(c), c.seed, fields, true), {}};
  o.report["result"]["counts"] = cj;
  try {
    o.report["result"]["invariant"] = to_json(estimate_dim_measure(counts, static_cast<int>(c.objects.size()), opts.estimate));
  } catch (const EstimationError& e) {
    o.report["result"]["invariant"] = nullptr;
    o.failures.push_back(std::string("CDM consistency: ") + e.what());
  }
  return o;
}

inline Outcome run_classify(const RunConfig& c) {
  if (c.objects.empty() || c.params.empty()) throw InvalidArgument("--objects and --params are required");
  const auto s = DefinableSet::make(load_formula(c), c.objects, c.params);
  const auto fields = resolve_fields(c, 3);
  const auto opts = regularity_options(c);
  auto cls = classify_parameters(s, fields, opts.estimate, opts.count);
  const auto catalog = predicate_catalog(c.params, "all parameters");
  for (auto& pc : cls.classes) pc.label = match_label(catalog, cls.fields, cls.params, pc.members).value_or("empirical");
  Outcome o{envelope("classify", config_json(c), c.seed, fields, true), {}};
  o.report["result"] = to_json(cls);
  for (const auto& pc : cls.classes)
    if (!pc.validated) o.failures.push_back("class " + std::to_string(pc.id) + " uniformity: " + pc.diagnostic);
  if (!c.csv_dir.empty()) write_classification_csv(csv_path(c, "classes.csv"), cls);
  return o;
}

inline BipartiteDefinableGraph load_graph_config(const RunConfig& c) {
  if (c.graph_override) return *c.graph_override;
  if (c.graph.empty()) throw InvalidArgument("--graph is required");
  return load_graph(c.graph, c.max_complexity);
}

inline Outcome run_partition(const RunConfig& c) {
  const auto g = load_graph_config(c);
  const auto fields = resolve_fields(c, 3);
  const auto opts = regularity_options(c);
  const auto a = analyze_graph(g, fields, opts, false);
  std::vector<ExceptionalDimensionCheck> checks;
  Outcome o{envelope("partition", config_json(c), c.seed, fields, a.w.exact), {}};
  for (const auto& s : a.w.summaries) {
    checks.push_back(check_exceptional_dimension(s, fields, a.dims.k, opts.exponent_slack));
    if (!checks.back().pass)
      o.failures.push_back("exceptional dimension of block pair (" + std::to_string(s.i) + ", " + std::to_string(s.j) +
                           "): " + checks.back().diagnostic);
  }
  ojson r;
  r["graph"] = graph_to_json(g);
  r["V"] = to_json(a.dims.v);
  r["W"] = to_json(a.dims.w);
  ojson cont = ojson::array();
  for (std::size_t f = 0; f < fields.size(); ++f) {
    cont.push_back(a.containment[f] ? ojson(*a.containment[f]) : ojson(nullptr));
    if (a.containment[f].value_or(0) != 0)
      o.failures.push_back("E is not contained in V x W over F_" + fields[f].descriptor());
  }
  r["containment_violations"] = cont;
  r["partition"] = to_json(a.w, checks);
  o.report["result"] = r;
  if (!c.csv_dir.empty()) write_partition_csv(csv_path(c, "partition.csv"), a.w);
  return o;
}

/// Block file: {"V": [per field: [[indices], ...]], "W": [...]}, indices into
/// the lexicographically ordered points of V(F) and W(F).
inline std::pair<std::vector<Blocks>, std::vector<Blocks>> load_blocks(const std::string& path, std::size_t nfields) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open block file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    auto side = [&](const char* key) {
      auto v = j.at(key).get<std::vector<Blocks>>();
      if (v.size() != nfields) throw InvalidArgument(std::string("block file: \"") + key + "\" needs one entry per field");
      return v;
    };
    return {side("V"), side("W")};
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("block file '" + path + "': " + e.what());
  }
}

inline Outcome run_verify(const RunConfig& c) {
  const auto g = load_graph_config(c);
  const auto fields = resolve_fields(c, 2);
  const auto opts = regularity_options(c);
  if (c.samples < 1) throw InvalidArgument("--samples must be at least 1");
  std::vector<FieldGraph> graphs;
  for (const auto& f : fields) graphs.push_back(materialize(g, f, opts.count));
  std::vector<Blocks> bv, bw;
  bool exact = true;
  if (!c.blocks.empty()) {
    std::tie(bv, bw) = load_blocks(c.blocks, fields.size());
  } else if (c.trivial_partition) {
    std::vector<std::size_t> nv, nw;
    for (const auto& fg : graphs) {
      nv.push_back(fg.v.size());
      nw.push_back(fg.w.size());
    }
    bv = trivial_blocks(nv);
    bw = trivial_blocks(nw);
  } else {
    if (fields.size() < 3) throw InvalidArgument("partitioning needs at least 3 fields");
    const auto a = analyze_graph(g, fields, opts, true);
    bv = field_blocks(*a.v);
    bw = field_blocks(a.w);
    exact = a.w.exact && a.v->exact;
  }
  const auto rep = verify_regularity(graphs, bv, bw, c.samples, c.seed, opts);
  Outcome o{envelope("verify", config_json(c), c.seed, fields, exact), {}};
  o.report["result"] = to_json(rep);
  if (!rep.density_consistent) o.failures.push_back("density consistency: block edge counts do not sum to |E|");
  if (!rep.alpha_ok) o.failures.push_back("clause (iii) exponent: fitted alpha above " + std::to_string(rep.alpha_bound));
  if (!rep.clause_ok) o.failures.push_back("clause (iii) constant: required C exceeds C_emp");
  if (!c.csv_dir.empty()) {
    write_density_csv(csv_path(c, "density.csv"), rep);
    write_deviation_csv(csv_path(c, "deviation.csv"), rep);
  }
  return o;
}

inline Outcome run_demo_command(const RunConfig& c, std::ostream& err) {
  RunConfig dc = c;
  if (dc.fields.empty() && dc.fields_range.empty()) dc.fields = {"11", "13", "17", "19", "23", "29"};
  const auto fields = resolve_fields(dc, 3);
  const auto opts = regularity_options(dc);
  auto d = run_demo(fields, dc.samples, dc.seed, opts);
  Outcome o{envelope("demo", config_json(dc), dc.seed, fields, true), d.failures};
  o.report["result"] = d.result;
  for (const auto& line : d.summary) err << line << "\n";
  return o;
}

/// Runs one command. Reports go to `out` (or the configured file),
/// diagnostics to `err`.
inline int run(const RunConfig& c, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    Outcome o;
    if (c.command == "count") o = run_count(c);
    else if (c.command == "dim") o = run_dim(c);
    else if (c.command == "classify") o = run_classify(c);
    else if (c.command == "partition") o = run_partition(c);
    else if (c.command == "verify") o = run_verify(c);
    else if (c.command == "demo") o = run_demo_command(c, err);
    else throw InvalidArgument("unknown command '" + c.command + "'");
    o.report["failures"] = o.failures;
    o.report["pass"] = o.failures.empty();
    write_report(c, o.report, out);
    for (const auto& f : o.failures) err << "pfreg: check failed: " << f << "\n";
    return o.failures.empty() ? kOk : kCheckFailed;
  } catch (const BudgetExceeded& e) {
    err << "pfreg: budget exceeded: " << e.what() << "\n";
    return kBudgetError;
  } catch (const UnstablePartition& e) {
    err << "pfreg: check failed: " << e.what() << "\n";
    for (const auto& d : e.per_field()) err << "  " << d << "\n";
    return kCheckFailed;
  } catch (const CheckFailure& e) {
    err << "pfreg: check failed: " << e.what() << "\n";
    return kCheckFailed;
  } catch (const EstimationError& e) {
    err << "pfreg: check failed: " << e.what() << "\n";
    return kCheckFailed;
  } catch (const ParseError& e) {
    err << "pfreg: formula error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InvalidArgument& e) {
    err << "pfreg: configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "pfreg: configuration error: " << e.what() << "\n";
    return kConfigError;
  }
}

/// Parses argv into a RunConfig and runs it.
inline int main(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig c;
  CLI::App app{"pfreg: definable sets over finite fields, dimension-measure estimation and regularity checks"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1, 1);

  auto add_fields = [&](CLI::App* s) {
    s->add_option("--fields", c.fields, "Field descriptors p or p^k, comma separated")->delimiter(',');
    s->add_option("--fields-range", c.fields_range, "Primes lo:hi, optionally :mod=m[/r] for p = r mod m (r defaults to 1)");
  };
  auto add_budget = [&](CLI::App* s) {
    s->add_option("--max-work", c.max_work, "Enumeration cap in work units")->capture_default_str();
    s->add_option("--max-complexity", c.max_complexity, "Reject formulas with more AST nodes");
  };
  auto add_estimate = [&](CLI::App* s) {
    s->add_option("--max-den", c.max_den, "Largest measure denominator")->capture_default_str();
    s->add_option("--residual-threshold", c.residual_threshold, "Largest accepted CDM constant")->capture_default_str();
  };
  auto add_partition = [&](CLI::App* s) {
    s->add_option("--graph", c.graph, "Graph spec JSON file")->required();
    s->add_option("--pair-table-cap", c.pair_table_cap, "Exact pair tables up to this many W points")->capture_default_str();
    s->add_option("--pair-samples", c.pair_samples, "Sampled pairs above the cap")->capture_default_str();
    s->add_option("--max-blocks", c.max_blocks, "Refinement limit")->capture_default_str();
    s->add_option("--tau", c.tau, "Exceptional-fraction tolerance (default 2/sqrt(q))");
    s->add_option("--exponent-slack", c.exponent_slack, "Slack on the exceptional-set exponent")->capture_default_str();
  };
  auto add_output = [&](CLI::App* s) {
    s->add_option("-o,--output", c.output, "Write the JSON report here instead of stdout");
    s->add_option("--csv", c.csv_dir, "Directory for CSV companions");
    s->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  };

  auto* count = app.add_subcommand("count", "Exact point count of a definable set");
  count->add_option("--formula", c.formula, "Formula text or file")->required();
  count->add_option("--objects", c.objects, "Object variables")->delimiter(',')->required();
  count->add_option("--params", c.bindings, "Parameter bindings name=value (element index)")->delimiter(',');
  count->add_option("--field", c.field, "Field descriptor");
  add_fields(count);
  add_budget(count);
  add_output(count);

  auto* dim = app.add_subcommand("dim", "Estimate (dimension, measure) across fields");
  dim->add_option("--formula", c.formula, "Formula text or file")->required();
  dim->add_option("--objects", c.objects, "Object variables")->delimiter(',')->required();
  add_fields(dim);
  add_budget(dim);
  add_estimate(dim);
  add_output(dim);

  auto* classify = app.add_subcommand("classify", "Group parameters by fiber invariant");
  classify->add_option("--formula", c.formula, "Formula text or file")->required();
  classify->add_option("--objects", c.objects, "Object variables")->delimiter(',')->required();
  classify->add_option("--params", c.params, "Parameter variables")->delimiter(',')->required();
  add_fields(classify);
  add_budget(classify);
  add_estimate(classify);
  add_output(classify);

  auto* partition = app.add_subcommand("partition", "Build the cross-field partition of W");
  add_partition(partition);
  add_fields(partition);
  add_budget(partition);
  add_estimate(partition);
  add_output(partition);

  auto* verify = app.add_subcommand("verify", "Sample the regularity bound on a partition");
  add_partition(verify);
  add_fields(verify);
  add_budget(verify);
  add_estimate(verify);
  add_output(verify);
  verify->add_option("--samples", c.samples, "Sampled (A, B) per block pair and field")->capture_default_str();
  verify->add_option("--blocks", c.blocks, "Explicit V/W blocks (JSON)");
  verify->add_flag("--trivial-partition", c.trivial_partition, "Use one block for V and one for W");
  verify->add_option("--alpha-slack", c.alpha_slack, "Slack on the -1/4 exponent bound")->capture_default_str();

  auto* demo = app.add_subcommand("demo", "Run the demo corpus end to end");
  add_fields(demo);
  add_budget(demo);
  add_estimate(demo);
  add_output(demo);
  demo->add_option("--samples", c.samples, "Sampled (A, B) per block pair and field")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << kToolVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "pfreg: configuration error: " << e.what() << "\n";
    return kConfigError;
  }
  for (auto* s : {count, dim, classify, partition, verify, demo})
    if (s->parsed()) c.command = s->get_name();
  return run(c, out, err);
}

}  // namespace pfreg::cli
