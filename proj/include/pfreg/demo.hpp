#pragma once

// The demo corpus and its end-to-end run.

#include <ostream>
#include <string>
#include <vector>

#include "pfreg/catalog.hpp"
#include "pfreg/counting.hpp"
#include "pfreg/dim_measure.hpp"
#include "pfreg/graph_spec.hpp"
#include "pfreg/regularity.hpp"
#include "pfreg/report.hpp"

namespace pfreg {

struct CorpusSet {
  std::string name;
  std::string formula;
  std::vector<std::string> objects;
  DimMeasure expected;
};

struct CorpusFamily {
  std::string name;
  std::string formula;
  std::vector<std::string> objects;
  std::vector<std::string> params;
  std::size_t expected_classes;
};

struct CorpusGraph {
  std::string name;
  BipartiteDefinableGraph graph;
  std::size_t expected_blocks;
  std::optional<Rational> expected_c;  // of block pair (0, 0) when constant
};

inline DimMeasure expect(int d, Rational mu) { return {d, mu, 0.0, 0}; }

inline std::vector<CorpusSet> demo_sets() {
  return {
      {"squares", "E y. y*y = x", {"x"}, expect(1, {1, 2})},
      {"units", "E y. x*y = 1", {"x"}, expect(1, {1})},
      {"function graph", "y = x*x", {"x", "y"}, expect(1, {1})},
      {"conic", "x*x + y*y = 1", {"x", "y"}, expect(1, {1})},
      {"plane", "x = x & y = y", {"x", "y"}, expect(2, {1})},
      {"unsatisfiable", "!(x = x)", {"x"}, DimMeasure::empty()},
  };
}

inline std::vector<CorpusFamily> demo_families() {
  return {
      {"square class", "E z. (z*z = x*y & !(x*y = 0))", {"x"}, {"y"}, 2},
      {"inverse", "y*x = 1", {"x"}, {"y"}, 2},
  };
}

inline BipartiteDefinableGraph paley_graph() {
  return BipartiteDefinableGraph::make("paley", DefinableSet::parse("x = x", {"x"}), DefinableSet::parse("y = y", {"y"}),
                                       DefinableSet::parse("E z. (z*z = x - y & !(x = y))", {"x"}, {"y"}));
}

inline BipartiteDefinableGraph square_class_graph() {
  return BipartiteDefinableGraph::make("square class", DefinableSet::parse("!(x = 0)", {"x"}),
                                       DefinableSet::parse("!(y = 0)", {"y"}),
                                       DefinableSet::parse("E z. (z*z = x*y & !(x*y = 0))", {"x"}, {"y"}));
}

inline BipartiteDefinableGraph function_graph() {
  return BipartiteDefinableGraph::make("function graph", DefinableSet::parse("x = x", {"x"}),
                                       DefinableSet::parse("y = y", {"y"}), DefinableSet::parse("y = x*x", {"x"}, {"y"}));
}

inline BipartiteDefinableGraph edgeless_graph() {
  return BipartiteDefinableGraph::make("edgeless", DefinableSet::parse("x = x", {"x"}), DefinableSet::parse("y = y", {"y"}),
                                       DefinableSet::parse("!(x = x)", {"x"}, {"y"}));
}

inline std::vector<CorpusGraph> demo_graphs() {
  return {
      {"paley", paley_graph(), 1, Rational{1, 4}},
      {"square class", square_class_graph(), 2, Rational{1, 2}},
      {"function graph", function_graph(), 1, std::nullopt},
  };
}

struct DemoOutcome {
  ojson result;
  std::vector<std::string> failures;
  std::vector<std::string> summary;  // human-readable lines
};

/// Runs the corpus over `fields`. Never throws for check failures; those are
/// collected in `failures`.
inline DemoOutcome run_demo(const std::vector<FieldSpec>& fields, std::size_t samples, std::uint64_t seed,
                            const RegularityOptions& opts) {
  DemoOutcome out;
  auto fail = [&](const std::string& what) { out.failures.push_back(what); };

  ojson sets = ojson::array();
  for (const auto& cs : demo_sets()) {
    ojson j;
    j["name"] = cs.name;
    j["formula"] = cs.formula;
    const auto s = DefinableSet::parse(cs.formula, cs.objects);
    std::vector<CountSample> counts;
    ojson cj = ojson::array();
    for (const auto& r : count_sweep(s, fields, {}, opts.count)) {
      counts.emplace_back(r.q, r.count);
      cj.push_back(r.count);
    }
    j["counts"] = cj;
    try {
      const auto dm = estimate_dim_measure(counts, static_cast<int>(cs.objects.size()), opts.estimate);
      j["invariant"] = to_json(dm);
      const bool ok = dm.same_invariant(cs.expected);
      j["pass"] = ok;
      if (!ok) fail("dim " + cs.name + ": got " + dm.str() + ", expected " + cs.expected.str());
      out.summary.push_back("set " + cs.name + ": " + dm.str());
    } catch (const EstimationError& e) {
      j["error"] = e.what();
      j["pass"] = false;
      fail("dim " + cs.name + ": " + e.what());
    }
    sets.push_back(j);
  }
  out.result["sets"] = sets;

  ojson families = ojson::array();
  for (const auto& cf : demo_families()) {
    const auto s = DefinableSet::parse(cf.formula, cf.objects, cf.params);
    auto c = classify_parameters(s, fields, opts.estimate, opts.count);
    const auto catalog = predicate_catalog(cf.params, "all parameters");
    for (auto& pc : c.classes) pc.label = match_label(catalog, c.fields, c.params, pc.members).value_or("empirical");
    ojson j = to_json(c);
    j = ojson{{"name", cf.name}, {"formula", cf.formula}, {"classification", j}};
    bool ok = c.classes.size() == cf.expected_classes;
    for (const auto& pc : c.classes) ok = ok && pc.validated;
    j["pass"] = ok;
    if (!ok) fail("classify " + cf.name + ": " + std::to_string(c.classes.size()) + " class(es), expected " +
                  std::to_string(cf.expected_classes) + " validated");
    std::string line = "family " + cf.name + ": " + std::to_string(c.classes.size()) + " class(es)";
    for (const auto& pc : c.classes) line += " [" + pc.label.value_or("?") + " " + pc.invariant.str() + "]";
    out.summary.push_back(line);
    families.push_back(j);
  }
  out.result["families"] = families;

  ojson graphs = ojson::array();
  for (const auto& cg : demo_graphs()) {
    ojson j;
    j["name"] = cg.name;
    j["graph"] = graph_to_json(cg.graph);
    try {
      const auto a = analyze_graph(cg.graph, fields, opts, true);
      std::vector<ExceptionalDimensionCheck> checks;
      for (const auto& s : a.w.summaries) {
        checks.push_back(check_exceptional_dimension(s, fields, a.dims.k, opts.exponent_slack));
        if (!checks.back().pass)
          fail("partition " + cg.name + ": exceptional set of block pair (" + std::to_string(s.i) + ", " +
               std::to_string(s.j) + ") too large: " + checks.back().diagnostic);
      }
      j["partition"] = to_json(a.w, checks);
      if (a.w.blocks.size() != cg.expected_blocks)
        fail("partition " + cg.name + ": " + std::to_string(a.w.blocks.size()) + " block(s), expected " +
             std::to_string(cg.expected_blocks));
      const auto& s00 = a.w.summary(0, 0);
      if (cg.expected_c && (s00.verdict != Verdict::Constant || s00.c != *cg.expected_c))
        fail("partition " + cg.name + ": c_00 = " + s00.c.str() + ", expected " + cg.expected_c->str());
      for (std::size_t f = 0; f < fields.size(); ++f)
        if (a.containment[f].value_or(0) != 0) fail("graph " + cg.name + ": E not contained in V x W");

      const auto rep = verify_regularity(a.graphs, field_blocks(*a.v), field_blocks(a.w), samples, seed, opts);
      j["regularity"] = to_json(rep);
      if (!rep.density_consistent) fail("verify " + cg.name + ": density consistency");
      if (!rep.alpha_ok) fail("verify " + cg.name + ": fitted exponent above " + std::to_string(rep.alpha_bound));
      if (!rep.clause_ok) fail("verify " + cg.name + ": clause (iii) constant above C_emp");

      std::string line = "graph " + cg.name + ": " + std::to_string(a.w.blocks.size()) + " block(s)";
      for (const auto& b : a.w.blocks) line += " [" + b.label.value_or("?") + "]";
      line += ", c_00 " + (s00.verdict == Verdict::Constant ? s00.c.str() : std::string("degenerate"));
      if (rep.fit) line += ", alpha " + std::to_string(rep.fit->exponent);
      out.summary.push_back(line);
    } catch (const EstimationError& e) {
      j["error"] = e.what();
      fail("graph " + cg.name + ": " + e.what());
    } catch (const CheckFailure& e) {
      j["error"] = e.what();
      fail("graph " + cg.name + ": " + e.what());
    }
    graphs.push_back(j);
  }
  out.result["graphs"] = graphs;
  out.result["failures"] = out.failures;
  out.result["pass"] = out.failures.empty();
  return out;
}

}  // namespace pfreg
