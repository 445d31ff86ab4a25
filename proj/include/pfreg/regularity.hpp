#pragma once

// Pair-invariant tables, partition recovery and regularity verification for
// definable bipartite graphs E ⊆ V × W over finite fields.
//
// For a ∈ W(F) the fiber E(x, a) is a subset of V(F). Two parameters a, b
// are compared through |E(x, a) ∩ E(x, b)|: either that intersection has the
// full dimension n = dim V with some measure c, or it is degenerate (lower
// dimensional). Blocks of W are built per field so that almost every pair in
// each block pair shares one such invariant; the minority pairs form the
// exceptional sets. The block structure must agree across all fields.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <tuple>
#include <string>
#include <utility>
#include <vector>

#include "pfreg/catalog.hpp"
#include "pfreg/counting.hpp"
#include "pfreg/dim_measure.hpp"
#include "pfreg/error.hpp"
#include "pfreg/field.hpp"
#include "pfreg/fit.hpp"
#include "pfreg/parallel.hpp"
#include "pfreg/random.hpp"

namespace pfreg {

/// Replaces the E formula when set. Only meant for tests and fixtures whose
/// edge relation is not uniformly definable.
using EdgeHook =
    std::function<bool(const FieldSpec&, std::span<const std::uint32_t> x, std::span<const std::uint32_t> y)>;

struct BipartiteDefinableGraph {
  std::string name;
  DefinableSet V;  // objects x, no parameters
  DefinableSet W;  // objects y, no parameters
  DefinableSet E;  // objects x, parameters y
  EdgeHook edge_hook;

  static BipartiteDefinableGraph make(std::string name, DefinableSet V, DefinableSet W, DefinableSet E) {
    if (!V.params.empty() || !W.params.empty()) throw InvalidArgument("V and W must not have parameters");
    if (E.objects != V.objects) throw InvalidArgument("E's object variables must be V's object variables");
    if (E.params != W.objects) throw InvalidArgument("E's parameter variables must be W's object variables");
    return {std::move(name), std::move(V), std::move(W), std::move(E), {}};
  }
};

struct RegularityOptions {
  EstimateOptions estimate;
  CountOptions count;
  /// Pair tables are exact while |W(F)| is at most this.
  std::size_t pair_table_cap = 512;
  /// Approximate number of sampled pairs above the cap.
  std::size_t pair_samples = 10000;
  /// Exceptional-fraction tolerance; when unset, tau_scale / sqrt(q).
  std::optional<double> tau;
  double tau_scale = 2.0;
  std::size_t max_blocks = 64;
  double exponent_slack = 0.25;
  /// verify: passes when the fitted exponent is <= -1/4 + alpha_slack.
  double alpha_slack = 0.0;
  std::uint64_t seed = 0;

  double tau_for(std::uint32_t q) const { return tau ? *tau : tau_scale / std::sqrt(static_cast<double>(q)); }
};

/// One field's materialization: the point sets and the edge matrix
/// (rows indexed by W(F), columns by V(F)).
struct FieldGraph {
  FieldSpec field;
  PointSet v;
  PointSet w;
  BitMatrix edges;

  /// Same graph with the roles of V and W exchanged.
  FieldGraph transposed() const { return {field, w, v, edges.transposed()}; }
};

inline FieldGraph materialize(const BipartiteDefinableGraph& g, const FieldSpec& field, const CountOptions& opts = {}) {
  FieldGraph fg{field, enumerate_points(g.V, field, opts), enumerate_points(g.W, field, opts), {}};
  if (g.edge_hook) {
    fg.edges = BitMatrix(fg.w.size(), fg.v.size());
    for (std::size_t a = 0; a < fg.w.size(); ++a)
      for (std::size_t x = 0; x < fg.v.size(); ++x)
        if (g.edge_hook(field, fg.v.at(x), fg.w.at(a))) fg.edges.set(a, x);
  } else {
    fg.edges = fiber_matrix(g.E, field, fg.v, fg.w, opts);
  }
  return fg;
}

/// Number of (x, y) in F^|x| × F^|y| with E(x, y) but not V(x) ∧ W(y).
/// Returns nullopt when the exhaustive check does not fit the budget.
inline std::optional<std::uint64_t> containment_violations(const BipartiteDefinableGraph& g, const FieldGraph& fg,
                                                           const CountOptions& opts = {}) {
  if (g.edge_hook) return 0;
  const std::uint32_t q = fg.field.order();
  const std::size_t nx = g.E.objects.size(), ny = g.E.params.size();
  if (work_units(q, nx + ny, quantifier_depth(*g.E.formula)) > opts.max_work) return std::nullopt;
  auto rank = [q](std::span<const std::uint32_t> t) {
    std::uint64_t r = 0;
    for (auto c : t) r = r * q + c;
    return r;
  };
  std::vector<char> in_v(detail::int_pow(q, nx), 0), in_w(detail::int_pow(q, ny), 0);
  for (std::size_t i = 0; i < fg.v.size(); ++i) in_v[rank(fg.v.at(i))] = 1;
  for (std::size_t i = 0; i < fg.w.size(); ++i) in_w[rank(fg.w.at(i))] = 1;
  CompiledFormula c(*g.E.formula, fg.field, g.E.slots());
  std::vector<std::uint64_t> partial(worker_count(), 0);
  const std::uint64_t total = detail::int_pow(q, nx + ny);
  parallel_chunks(total, [&](std::size_t begin, std::size_t end, unsigned w) {
    std::vector<std::uint32_t> env(c.slot_count(), 0);
    std::span<std::uint32_t> all(env.data(), nx + ny);
    for (std::uint64_t idx = begin; idx < end; ++idx) {
      detail::unrank(idx, q, all);
      if (!c.eval(env)) continue;
      if (!in_v[idx / detail::int_pow(q, ny)] || !in_w[idx % detail::int_pow(q, ny)]) ++partial[w];
    }
  });
  return std::accumulate(partial.begin(), partial.end(), std::uint64_t{0});
}

struct GraphDimensions {
  DimMeasure v;
  DimMeasure w;
  int n = 0;  // dim V
  int k = 0;  // dim W
};

inline GraphDimensions graph_dimensions(const std::vector<FieldGraph>& graphs, const EstimateOptions& est = {}) {
  std::vector<CountSample> vs, ws;
  std::size_t nx = 0, ny = 0;
  for (const auto& g : graphs) {
    vs.emplace_back(g.field.order(), g.v.size());
    ws.emplace_back(g.field.order(), g.w.size());
    nx = g.v.arity;
    ny = g.w.arity;
  }
  GraphDimensions d;
  d.v = estimate_dim_measure(vs, static_cast<int>(nx), est);
  d.w = estimate_dim_measure(ws, static_cast<int>(ny), est);
  if (d.v.is_empty() || d.w.is_empty()) throw EstimationError("V or W is empty in every sampled field");
  d.n = *d.v.dim;
  d.k = *d.w.dim;
  return d;
}

// ---------------------------------------------------------------------------
// Pair invariant tables

/// Intersection counts |E(x, a) ∩ E(x, b)| for a ranging over all rows of
/// the edge matrix and b over `columns` (all rows when exact), together with
/// each entry's single-field invariant.
struct PairInvariantTable {
  FieldSpec field;
  int n = 0;
  std::size_t arity = 0;  // of the row tuples
  bool exact = true;
  std::size_t rows = 0;
  std::vector<std::size_t> columns;
  std::vector<std::uint64_t> counts;  // rows × columns, row-major
  std::vector<int> labels;            // 0: degenerate (dim < n); others index label_invariants
  std::vector<DimMeasure> label_invariants;
  std::map<std::uint64_t, DimMeasure> count_invariants;

  std::uint64_t count(std::size_t r, std::size_t c) const { return counts[r * columns.size() + c]; }
  int label(std::size_t r, std::size_t c) const { return labels[r * columns.size() + c]; }
  const DimMeasure& invariant(std::size_t r, std::size_t c) const { return count_invariants.at(count(r, c)); }
  bool degenerate(int label) const { return label == 0; }
};

inline PairInvariantTable pair_invariant_table(const FieldGraph& g, int n, const RegularityOptions& opts = {}) {
  PairInvariantTable t;
  t.field = g.field;
  t.n = n;
  t.arity = g.w.arity;
  t.rows = g.edges.rows();
  if (t.rows <= opts.pair_table_cap) {
    t.columns.resize(t.rows);
    std::iota(t.columns.begin(), t.columns.end(), std::size_t{0});
  } else {
    t.exact = false;
    const std::size_t want = std::max<std::size_t>(32, (opts.pair_samples + t.rows - 1) / t.rows);
    const std::size_t m = std::min(t.rows, want);
    std::vector<std::size_t> idx(t.rows);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(derive_seed(opts.seed, {g.field.order(), t.rows, 0x7ab1e}));
    for (std::size_t i = 0; i < m; ++i) std::swap(idx[i], idx[i + rng.below(t.rows - i)]);
    t.columns.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(t.columns.begin(), t.columns.end());
  }
  const std::size_t nc = t.columns.size();
  t.counts.assign(t.rows * nc, 0);
  parallel_for(t.rows, [&](std::size_t r) {
    for (std::size_t c = 0; c < nc; ++c) t.counts[r * nc + c] = g.edges.and_count(r, t.columns[c]);
  });

  std::vector<std::uint64_t> distinct(t.counts.begin(), t.counts.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const auto inv = provisional_invariants(g.field.order(), distinct, n, opts.estimate);
  std::map<Rational, int> by_measure;
  t.label_invariants.push_back(DimMeasure::empty(1));
  std::map<std::uint64_t, int> count_label;
  for (std::size_t i = 0; i < distinct.size(); ++i) {
    t.count_invariants[distinct[i]] = inv[i];
    if (inv[i].is_empty() || *inv[i].dim < n) {
      count_label[distinct[i]] = 0;
      continue;
    }
    auto [it, inserted] = by_measure.emplace(inv[i].measure, static_cast<int>(t.label_invariants.size()));
    if (inserted) t.label_invariants.push_back(inv[i]);
    count_label[distinct[i]] = it->second;
  }
  t.labels.resize(t.counts.size());
  for (std::size_t i = 0; i < t.counts.size(); ++i) t.labels[i] = count_label[t.counts[i]];
  return t;
}

/// Materializes the graph in every field and builds the W-side tables.
inline std::vector<PairInvariantTable> pair_invariant_table(const BipartiteDefinableGraph& g,
                                                            const std::vector<FieldSpec>& fields,
                                                            const RegularityOptions& opts = {}) {
  std::vector<FieldGraph> graphs;
  for (const auto& f : fields) graphs.push_back(materialize(g, f, opts.count));
  const auto dims = graph_dimensions(graphs, opts.estimate);
  std::vector<PairInvariantTable> out;
  for (const auto& fg : graphs) out.push_back(pair_invariant_table(fg, dims.n, opts));
  return out;
}

// ---------------------------------------------------------------------------
// Partition

enum class Verdict { Degenerate, Constant };

inline const char* to_string(Verdict v) { return v == Verdict::Constant ? "constant" : "degenerate"; }

struct PartitionBlock {
  int id = 0;
  std::vector<std::vector<std::size_t>> members;  // per field, row indices (points of W)
  DimMeasure measure;                             // of |W_i| across fields
  std::optional<std::string> label;

  std::size_t size(std::size_t field) const { return members[field].size(); }
};

struct PairClassSummary {
  int i = 0, j = 0;
  Verdict verdict = Verdict::Degenerate;
  Rational c{0};  // positive when constant
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> exceptional;  // per field
  std::vector<std::uint64_t> pairs_checked;                                   // per field
  std::vector<double> exceptional_fraction;                                   // per field
  std::vector<double> exceptional_size;  // per field, scaled to all of W_i × W_j
  double c_fit = 0.0;                    // CDM residual of non-exceptional counts
};

struct Partition {
  std::vector<FieldSpec> fields;
  int n = 0;
  bool exact = true;
  std::vector<PartitionBlock> blocks;
  std::vector<PairClassSummary> summaries;  // all ordered block pairs, row-major

  const PairClassSummary& summary(int i, int j) const {
    return summaries[static_cast<std::size_t>(i) * blocks.size() + static_cast<std::size_t>(j)];
  }
};

class UnstablePartition : public EstimationError {
 public:
  UnstablePartition(const std::string& what, std::vector<std::string> per_field)
      : EstimationError(what), per_field_(std::move(per_field)) {}
  const std::vector<std::string>& per_field() const noexcept { return per_field_; }

 private:
  std::vector<std::string> per_field_;
};

namespace detail {

struct FieldPartition {
  std::vector<std::vector<std::size_t>> blocks;
  std::string diagnostic;  // nonempty on failure
};

struct BlockPairStats {
  int majority = 0;
  std::uint64_t total = 0;
  std::uint64_t minority = 0;
};

class TablePartitioner {
 public:
  TablePartitioner(const PairInvariantTable& t, double tau, std::size_t max_blocks)
      : t_(t), tau_(tau), max_blocks_(max_blocks), col_of_(t.rows, -1) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) col_of_[t.columns[c]] = static_cast<long>(c);
  }

  FieldPartition run() {
    FieldPartition out;
    std::vector<std::vector<std::size_t>> blocks;
    std::vector<std::size_t> reps;
    const double row_tol = tau_ * static_cast<double>(t_.columns.size());
    for (std::size_t a = 0; a < t_.rows; ++a) {
      bool placed = false;
      for (std::size_t b = 0; b < reps.size() && !placed; ++b) {
        if (static_cast<double>(row_distance(a, reps[b])) <= row_tol) {
          blocks[b].push_back(a);
          placed = true;
        }
      }
      if (!placed) {
        if (reps.size() == max_blocks_) {
          out.diagnostic = "more than " + std::to_string(max_blocks_) + " blocks needed";
          return out;
        }
        reps.push_back(a);
        blocks.push_back({a});
      }
    }
    for (;;) {
      bool changed = false;
      for (std::size_t i = 0; i < blocks.size() && !changed; ++i) {
        for (std::size_t j = 0; j < blocks.size() && !changed; ++j) {
          const auto st = stats(blocks[i], blocks[j]);
          if (homogeneous(st)) continue;
          auto split = split_by_mode(blocks[j], blocks[i]);
          std::size_t target = j;
          if (split.size() < 2) {
            split = split_by_mode(blocks[i], blocks[j]);
            target = i;
          }
          if (split.size() < 2) {
            out.diagnostic = "block pair (" + std::to_string(i) + ", " + std::to_string(j) +
                             ") has exceptional fraction " +
                             std::to_string(static_cast<double>(st.minority) / static_cast<double>(st.total)) +
                             " above tolerance and cannot be refined";
            return out;
          }
          if (blocks.size() - 1 + split.size() > max_blocks_) {
            out.diagnostic = "more than " + std::to_string(max_blocks_) + " blocks needed";
            return out;
          }
          blocks[target] = std::move(split[0]);
          for (std::size_t s = 1; s < split.size(); ++s) blocks.push_back(std::move(split[s]));
          changed = true;
        }
      }
      if (!changed) break;
    }
    out.blocks = std::move(blocks);
    return out;
  }

  BlockPairStats stats(const std::vector<std::size_t>& bi, const std::vector<std::size_t>& bj) const {
    std::map<int, std::uint64_t> hist;
    BlockPairStats st;
    for (auto b : bj) {
      const long c = col_of_[b];
      if (c < 0) continue;
      for (auto a : bi) {
        ++hist[t_.label(a, static_cast<std::size_t>(c))];
        ++st.total;
      }
    }
    if (st.total == 0) {
      // sampled table without columns in bj: fall back to the transposed pairs
      for (auto a : bi) {
        const long c = col_of_[a];
        if (c < 0) continue;
        for (auto b : bj) {
          ++hist[t_.label(b, static_cast<std::size_t>(c))];
          ++st.total;
        }
      }
    }
    std::uint64_t best = 0;
    for (const auto& [label, count] : hist) {
      if (count > best) {
        best = count;
        st.majority = label;
      }
    }
    st.minority = st.total - best;
    return st;
  }

  bool homogeneous(const BlockPairStats& st) const {
    return st.total == 0 || static_cast<double>(st.minority) <= tau_ * static_cast<double>(st.total);
  }

 private:
  std::uint64_t row_distance(std::size_t a, std::size_t b) const {
    std::uint64_t d = 0;
    for (std::size_t c = 0; c < t_.columns.size(); ++c) d += t_.label(a, c) != t_.label(b, c);
    return d;
  }

  // Groups `target` by the most common label of row b over the columns in `other`.
  std::vector<std::vector<std::size_t>> split_by_mode(const std::vector<std::size_t>& target,
                                                      const std::vector<std::size_t>& other) const {
    std::map<int, std::vector<std::size_t>> groups;
    for (auto b : target) {
      std::map<int, std::uint64_t> hist;
      for (auto a : other) {
        const long c = col_of_[a];
        if (c >= 0) ++hist[t_.label(b, static_cast<std::size_t>(c))];
      }
      int mode = -1;
      std::uint64_t best = 0;
      for (const auto& [label, count] : hist)
        if (count > best) {
          best = count;
          mode = label;
        }
      groups[mode].push_back(b);
    }
    std::vector<std::vector<std::size_t>> out;
    for (auto& [mode, members] : groups) out.push_back(std::move(members));
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.front() < y.front(); });
    return out;
  }

  const PairInvariantTable& t_;
  double tau_;
  std::size_t max_blocks_;
  std::vector<long> col_of_;
};

}  // namespace detail

/// Builds the cross-field partition of W from per-field pair tables.
/// Throws UnstablePartition when some field has no admissible partition or
/// the fields disagree on the block structure.
inline Partition build_partition(const std::vector<PairInvariantTable>& tables, const RegularityOptions& opts = {}) {
  std::set<std::uint32_t> distinct_q;
  for (const auto& t : tables) distinct_q.insert(t.field.order());
  if (distinct_q.size() < 3) throw EstimationError("build_partition needs tables for at least 3 fields");

  const std::size_t nf = tables.size();
  std::vector<std::vector<std::vector<std::size_t>>> field_blocks(nf);
  std::vector<std::vector<detail::BlockPairStats>> field_stats(nf);
  std::vector<std::string> diags(nf);
  bool failed = false;

  for (std::size_t f = 0; f < nf; ++f) {
    const auto& t = tables[f];
    detail::TablePartitioner part(t, opts.tau_for(t.field.order()), opts.max_blocks);
    auto fp = part.run();
    if (!fp.diagnostic.empty()) {
      diags[f] = "F_" + t.field.descriptor() + ": " + fp.diagnostic;
      failed = true;
      continue;
    }
    // Canonical order: diagonal invariant, then smallest member.
    auto key = [&](const std::vector<std::size_t>& b) {
      const auto st = part.stats(b, b);
      const auto& inv = t.label_invariants[static_cast<std::size_t>(st.majority)];
      return std::make_tuple(st.majority == 0 ? -1 : t.n, st.majority == 0 ? Rational{0} : inv.measure, b.front());
    };
    std::sort(fp.blocks.begin(), fp.blocks.end(), [&](const auto& x, const auto& y) { return key(x) < key(y); });
    const std::size_t m = fp.blocks.size();
    field_stats[f].resize(m * m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) field_stats[f][i * m + j] = part.stats(fp.blocks[i], fp.blocks[j]);
    std::string verdicts;
    for (const auto& st : field_stats[f]) verdicts += st.majority == 0 ? 'D' : 'C';
    diags[f] = "F_" + t.field.descriptor() + ": " + std::to_string(m) + " block(s), verdicts " + verdicts;
    field_blocks[f] = std::move(fp.blocks);
  }
  auto join = [&] {
    std::string s;
    for (const auto& d : diags) s += (s.empty() ? "" : "; ") + d;
    return s;
  };
  if (failed) throw UnstablePartition("cross-field instability: no admissible partition in some field (" + join() + ")", diags);
  for (std::size_t f = 1; f < nf; ++f) {
    bool same = field_blocks[f].size() == field_blocks[0].size();
    for (std::size_t p = 0; same && p < field_stats[f].size(); ++p)
      same = (field_stats[f][p].majority == 0) == (field_stats[0][p].majority == 0);
    if (!same) throw UnstablePartition("cross-field instability: block structure differs between fields (" + join() + ")", diags);
  }

  Partition out;
  out.n = tables.front().n;
  const std::size_t m = field_blocks[0].size();
  for (const auto& t : tables) {
    out.fields.push_back(t.field);
    out.exact = out.exact && t.exact;
  }
  for (std::size_t i = 0; i < m; ++i) {
    PartitionBlock b;
    b.id = static_cast<int>(i);
    std::vector<CountSample> sizes;
    for (std::size_t f = 0; f < nf; ++f) {
      b.members.push_back(field_blocks[f][i]);
      sizes.emplace_back(tables[f].field.order(), field_blocks[f][i].size());
    }
    try {
      b.measure = estimate_dim_measure(sizes, static_cast<int>(tables.front().arity), opts.estimate);
    } catch (const EstimationError&) {
      b.measure = DimMeasure{};
    }
    out.blocks.push_back(std::move(b));
  }

  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      PairClassSummary s;
      s.i = static_cast<int>(i);
      s.j = static_cast<int>(j);
      std::vector<CountSample> regular;
      for (std::size_t f = 0; f < nf; ++f) {
        const auto& t = tables[f];
        const auto& st = field_stats[f][i * m + j];
        std::vector<long> col_of(t.rows, -1);
        for (std::size_t c = 0; c < t.columns.size(); ++c) col_of[t.columns[c]] = static_cast<long>(c);
        std::vector<std::pair<std::size_t, std::size_t>> exc;
        std::uint64_t checked = 0;
        for (auto a : field_blocks[f][i]) {
          for (auto b : field_blocks[f][j]) {
            const long c = col_of[b];
            if (c < 0) continue;
            ++checked;
            if (t.label(a, static_cast<std::size_t>(c)) != st.majority) {
              exc.emplace_back(a, b);
            } else if (st.majority != 0) {
              regular.emplace_back(t.field.order(), t.count(a, static_cast<std::size_t>(c)));
            }
          }
        }
        const double full = static_cast<double>(field_blocks[f][i].size()) * static_cast<double>(field_blocks[f][j].size());
        s.pairs_checked.push_back(checked);
        s.exceptional_fraction.push_back(checked ? static_cast<double>(exc.size()) / static_cast<double>(checked) : 0.0);
        s.exceptional_size.push_back(checked ? static_cast<double>(exc.size()) * full / static_cast<double>(checked) : 0.0);
        s.exceptional.push_back(std::move(exc));
      }
      if (field_stats[0][i * m + j].majority == 0) {
        s.verdict = Verdict::Degenerate;
      } else {
        s.verdict = Verdict::Constant;
        auto c = fit_measure(regular, out.n, opts.estimate);
        if (!c)
          throw UnstablePartition("cross-field instability: block pair (" + std::to_string(i) + ", " + std::to_string(j) +
                                      ") has no measure consistent across fields",
                                  diags);
        s.c = *c;
        s.c_fit = detail::max_residual(regular, out.n, *c);
      }
      out.summaries.push_back(std::move(s));
    }
  }
  return out;
}

struct ExceptionalDimensionCheck {
  bool pass = true;
  std::optional<double> exponent;  // fitted exponent of |D| against q; unset when D is empty everywhere
  double bound = 0.0;              // 2k - 1 + slack
  std::string diagnostic;
};

/// |D_ij| = O(q^(2k-1)) empirically: the log-log slope of |D_ij| against q
/// must not exceed 2k - 1 + slack.
inline ExceptionalDimensionCheck check_exceptional_dimension(const PairClassSummary& s,
                                                             const std::vector<FieldSpec>& fields, int k,
                                                             double slack = 0.25) {
  ExceptionalDimensionCheck r;
  r.bound = 2.0 * k - 1.0 + slack;
  std::vector<double> xs, ys;
  for (std::size_t f = 0; f < fields.size() && f < s.exceptional_size.size(); ++f) {
    if (s.exceptional_size[f] <= 0) continue;
    xs.push_back(fields[f].order());
    ys.push_back(s.exceptional_size[f]);
  }
  if (xs.empty()) {
    r.diagnostic = "exceptional set empty in every field";
    return r;
  }
  if (auto fit = fit_power_law(xs, ys)) {
    r.exponent = fit->exponent;
  } else {
    r.exponent = std::log(ys.front()) / std::log(xs.front());
  }
  r.pass = *r.exponent <= r.bound;
  r.diagnostic = "|D| ~ q^" + std::to_string(*r.exponent) + (r.pass ? " <= " : " > ") + "q^" + std::to_string(r.bound);
  return r;
}

/// Attaches the first catalog label that matches each block exactly in every field.
inline void match_block_labels(Partition& p, const std::vector<PointSet>& universe, const std::vector<std::string>& vars) {
  const auto catalog = predicate_catalog(vars);
  for (auto& b : p.blocks) b.label = match_label(catalog, p.fields, universe, b.members).value_or("empirical");
}

/// Everything the partition and verify commands need from one graph.
struct GraphAnalysis {
  std::vector<FieldGraph> graphs;
  GraphDimensions dims;
  std::vector<std::optional<std::uint64_t>> containment;  // per field; nullopt: not checked
  Partition w;
  std::optional<Partition> v;  // from the transposed graph
};

inline GraphAnalysis analyze_graph(const BipartiteDefinableGraph& g, const std::vector<FieldSpec>& fields,
                                   const RegularityOptions& opts = {}, bool v_side = false) {
  GraphAnalysis a;
  for (const auto& f : fields) {
    a.graphs.push_back(materialize(g, f, opts.count));
    a.containment.push_back(containment_violations(g, a.graphs.back(), opts.count));
  }
  a.dims = graph_dimensions(a.graphs, opts.estimate);
  std::vector<PairInvariantTable> tables;
  std::vector<PointSet> universe;
  for (const auto& fg : a.graphs) {
    tables.push_back(pair_invariant_table(fg, a.dims.n, opts));
    universe.push_back(fg.w);
  }
  a.w = build_partition(tables, opts);
  match_block_labels(a.w, universe, g.W.objects);
  if (v_side) {
    tables.clear();
    universe.clear();
    for (const auto& fg : a.graphs) {
      tables.push_back(pair_invariant_table(fg.transposed(), a.dims.k, opts));
      universe.push_back(fg.v);
    }
    a.v = build_partition(tables, opts);
    match_block_labels(*a.v, universe, g.V.objects);
  }
  return a;
}

/// Per-field block index lists of a partition.
inline std::vector<std::vector<std::vector<std::size_t>>> field_blocks(const Partition& p) {
  std::vector<std::vector<std::vector<std::size_t>>> out(p.fields.size());
  for (std::size_t f = 0; f < p.fields.size(); ++f)
    for (const auto& b : p.blocks) out[f].push_back(b.members[f]);
  return out;
}

/// One block holding every point, per field.
inline std::vector<std::vector<std::vector<std::size_t>>> trivial_blocks(const std::vector<std::size_t>& sizes) {
  std::vector<std::vector<std::vector<std::size_t>>> out;
  for (auto n : sizes) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    out.push_back({std::move(all)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Regularity verification

struct BlockPairDeviation {
  std::size_t field = 0;  // index into RegularityReport::fields
  int i = 0, j = 0;
  std::size_t size_v = 0, size_w = 0;
  std::uint64_t edges = 0;
  double density = 0.0;
  double max_deviation = 0.0;  // max over samples of ||E ∩ (A×B)| - d|A||B||
  double normalized = 0.0;     // max_deviation / (|V_i||W_j|)
  double clause_ratio = 0.0;   // max_deviation / (q^(-1/4) |V_i||W_j|)
};

struct RegularityReport {
  std::vector<FieldSpec> fields;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<BlockPairDeviation> entries;
  std::vector<double> max_normalized;      // per field, over block pairs
  std::vector<std::uint64_t> edge_totals;  // |E(F)| per field
  std::vector<double> min_block_fraction;  // per field: min over blocks of |V_i|/|V| and |W_j|/|W|
  std::optional<PowerLawFit> fit;          // max_normalized ≈ c_emp q^alpha
  double c_clause = 0.0;                   // least C with Δ <= C q^(-1/4) |V_i||W_j| on every sample
  bool alpha_ok = false;
  bool clause_ok = false;
  bool density_consistent = false;
  double alpha_bound = -0.25;
};

using Blocks = std::vector<std::vector<std::size_t>>;

/// |E ∩ (A × B)| for A ⊆ V(F) and B ⊆ W(F) given as point indices.
inline std::uint64_t edges_between(const BitMatrix& edges, const std::vector<std::size_t>& a,
                                   const std::vector<std::size_t>& b) {
  std::vector<std::uint64_t> mask(edges.words(), 0);
  for (auto x : a) mask[x / 64] |= std::uint64_t{1} << (x % 64);
  std::uint64_t n = 0;
  for (auto y : b) n += edges.masked_count(y, mask);
  return n;
}

inline double deviation(const BitMatrix& edges, const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                        double density) {
  const double expected = density * static_cast<double>(a.size()) * static_cast<double>(b.size());
  return std::fabs(static_cast<double>(edges_between(edges, a, b)) - expected);
}

inline RegularityReport verify_regularity(const std::vector<FieldGraph>& graphs, const std::vector<Blocks>& blocks_v,
                                          const std::vector<Blocks>& blocks_w, std::size_t samples, std::uint64_t seed,
                                          const RegularityOptions& opts = {}) {
  if (samples < 1) throw InvalidArgument("verify_regularity needs at least one sample");
  if (blocks_v.size() != graphs.size() || blocks_w.size() != graphs.size())
    throw InvalidArgument("verify_regularity needs V and W blocks for every field");
  RegularityReport rep;
  rep.samples = samples;
  rep.seed = seed;
  rep.alpha_bound = -0.25 + opts.alpha_slack;
  rep.density_consistent = true;
  for (std::size_t f = 0; f < graphs.size(); ++f) {
    const auto& g = graphs[f];
    const std::uint32_t q = g.field.order();
    rep.fields.push_back(g.field);
    auto check_cover = [&](const Blocks& bs, std::size_t total, const char* side) {
      std::vector<char> seen(total, 0);
      std::size_t covered = 0;
      for (std::size_t i = 0; i < bs.size(); ++i) {
        if (bs[i].empty())
          throw CheckFailure(std::string("clause (i) violated: block ") + side + "_" + std::to_string(i) +
                             " is empty in F_" + g.field.descriptor());
        for (auto x : bs[i]) {
          if (x >= total || seen[x]) throw InvalidArgument(std::string(side) + " blocks do not partition " + side + "(F)");
          seen[x] = 1;
          ++covered;
        }
      }
      if (covered != total) throw InvalidArgument(std::string(side) + " blocks do not cover " + side + "(F)");
    };
    check_cover(blocks_v[f], g.v.size(), "V");
    check_cover(blocks_w[f], g.w.size(), "W");

    double min_frac = 1.0;
    for (const auto& b : blocks_v[f]) min_frac = std::min(min_frac, static_cast<double>(b.size()) / g.v.size());
    for (const auto& b : blocks_w[f]) min_frac = std::min(min_frac, static_cast<double>(b.size()) / g.w.size());
    rep.min_block_fraction.push_back(min_frac);

    const std::uint64_t total_edges = g.edges.total();
    rep.edge_totals.push_back(total_edges);
    std::uint64_t block_edge_sum = 0;
    double field_max = 0.0;
    const double q_quarter = std::pow(static_cast<double>(q), -0.25);
    for (std::size_t i = 0; i < blocks_v[f].size(); ++i) {
      for (std::size_t j = 0; j < blocks_w[f].size(); ++j) {
        const auto& vi = blocks_v[f][i];
        const auto& wj = blocks_w[f][j];
        BlockPairDeviation e;
        e.field = f;
        e.i = static_cast<int>(i);
        e.j = static_cast<int>(j);
        e.size_v = vi.size();
        e.size_w = wj.size();
        e.edges = edges_between(g.edges, vi, wj);
        block_edge_sum += e.edges;
        const double area = static_cast<double>(vi.size()) * static_cast<double>(wj.size());
        e.density = static_cast<double>(e.edges) / area;
        std::vector<double> devs(samples, 0.0);
        parallel_for(samples, [&](std::size_t s) {
          Rng rng(derive_seed(seed, {q, i, j, s}));
          static constexpr double kDensities[3] = {0.25, 0.5, 0.75};
          const double pa = kDensities[rng.below(3)], pb = kDensities[rng.below(3)];
          std::vector<std::size_t> a, b;
          for (auto x : vi)
            if (rng.bernoulli(pa)) a.push_back(x);
          for (auto y : wj)
            if (rng.bernoulli(pb)) b.push_back(y);
          devs[s] = deviation(g.edges, a, b, e.density);
        });
        e.max_deviation = *std::max_element(devs.begin(), devs.end());
        e.normalized = e.max_deviation / area;
        e.clause_ratio = e.max_deviation / (q_quarter * area);
        field_max = std::max(field_max, e.normalized);
        rep.c_clause = std::max(rep.c_clause, e.clause_ratio);
        rep.entries.push_back(e);
      }
    }
    if (block_edge_sum != total_edges) rep.density_consistent = false;
    rep.max_normalized.push_back(field_max);
  }
  std::vector<double> qs;
  for (const auto& f : rep.fields) qs.push_back(f.order());
  rep.fit = fit_power_law(qs, rep.max_normalized);
  if (rep.fit) {
    rep.alpha_ok = rep.fit->exponent <= rep.alpha_bound;
    rep.clause_ok = rep.c_clause <= rep.fit->coefficient;
  } else {
    // Deviations vanish (or too few positive points to fit): the clause holds with C = 0.
    const bool all_zero = std::all_of(rep.max_normalized.begin(), rep.max_normalized.end(), [](double v) { return v == 0; });
    rep.alpha_ok = all_zero;
    rep.clause_ok = all_zero;
  }
  return rep;
}

}  // namespace pfreg
