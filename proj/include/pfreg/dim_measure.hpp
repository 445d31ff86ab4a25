#pragma once

// (dimension, measure) estimation from exact counts over a family of fields.
//
// A definable set X has invariant (d, mu) when |X(F_q)| = mu q^d + O(q^(d-1/2))
// uniformly in q. Given counts N_q we pick d by requiring N_q / q^d to be
// flat across q, then pick mu as the simplest rational (smallest
// denominator) inside every error window |N_q / q^d - mu| <= C q^(-1/2),
// starting from a small C and doubling up to the residual threshold.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pfreg/counting.hpp"
#include "pfreg/error.hpp"
#include "pfreg/field.hpp"
#include "pfreg/rational.hpp"

namespace pfreg {

struct DimMeasure {
  std::optional<int> dim;  // nullopt: empty in every sampled field
  Rational measure{0};
  double fit_residual = 0.0;
  int field_count = 0;

  static DimMeasure empty(int fields = 0) { return {std::nullopt, Rational{0}, 0.0, fields}; }
  bool is_empty() const noexcept { return !dim.has_value(); }

  /// Same invariant; fit statistics are ignored.
  bool same_invariant(const DimMeasure& o) const { return dim == o.dim && (is_empty() || measure == o.measure); }

  std::string str() const { return is_empty() ? "empty" : "(" + std::to_string(*dim) + ", " + measure.str() + ")"; }
};

struct EstimateOptions {
  std::int64_t max_den = 64;
  /// Largest accepted C in |N_q - mu q^d| <= C q^(d-1/2).
  double residual_threshold = 10.0;
  /// Starting C for the measure windows.
  double snap_tolerance = 0.5;
  /// Single-field clustering: counts join a cluster while they stay within
  /// 2 * cluster_tolerance * q^(d-1/2) of its smallest member.
  double cluster_tolerance = 0.25;
  /// A single count N has provisional dimension d when N >= dimension_split * q^(d-1/2).
  double dimension_split = 0.5;
};

/// The residual constant of the CDM error model: exponent gap fixed at 1/2.
struct CdmErrorModel {
  static constexpr double exponent_gap = 0.5;
  double c_fit = 0.0;

  bool admits(std::uint64_t q, std::uint64_t count, int d, Rational mu) const {
    return residual(q, count, d, mu) <= c_fit + 1e-12;
  }
  static double residual(std::uint64_t q, std::uint64_t count, int d, Rational mu) {
    const double qd = std::pow(static_cast<double>(q), d);
    return std::fabs(static_cast<double>(count) - mu.value() * qd) / (qd / std::sqrt(static_cast<double>(q)));
  }
};

using CountSample = std::pair<std::uint64_t, std::uint64_t>;  // (q, N_q)

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double max_residual(const std::vector<CountSample>& counts, int d, Rational mu) {
  double r = 0;
  for (auto [q, n] : counts) r = std::max(r, CdmErrorModel::residual(q, n, d, mu));
  return r;
}

}  // namespace detail

/// Simplest measure consistent with every sample at dimension d, widening the
/// error windows geometrically from snap_tolerance to residual_threshold.
inline std::optional<Rational> fit_measure(const std::vector<CountSample>& counts, int d, const EstimateOptions& opts) {
  if (counts.empty()) return std::nullopt;
  std::vector<double> ratios;
  for (auto [q, n] : counts) ratios.push_back(static_cast<double>(n) / std::pow(static_cast<double>(q), d));
  const double center = detail::median(ratios);
  for (double c = opts.snap_tolerance; c <= opts.residual_threshold * (1 + 1e-12); c *= 2) {
    double lo = -INFINITY, hi = INFINITY;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      const double w = c / std::sqrt(static_cast<double>(counts[i].first));
      lo = std::max(lo, ratios[i] - w);
      hi = std::min(hi, ratios[i] + w);
    }
    if (auto mu = simplest_in(lo, hi, opts.max_den, center)) return mu;
  }
  return std::nullopt;
}

inline DimMeasure estimate_dim_measure(const std::vector<CountSample>& counts, int n_max,
                                       const EstimateOptions& opts = {}) {
  std::set<std::uint64_t> distinct;
  for (auto [q, n] : counts) distinct.insert(q);
  if (distinct.size() < 3)
    throw EstimationError("estimate_dim_measure needs at least 3 distinct field sizes, got " +
                          std::to_string(distinct.size()));
  const int fields = static_cast<int>(distinct.size());
  const bool all_zero = std::all_of(counts.begin(), counts.end(), [](auto c) { return c.second == 0; });
  if (all_zero) return DimMeasure::empty(fields);
  if (std::any_of(counts.begin(), counts.end(), [](auto c) { return c.second == 0; }))
    throw EstimationError("set is empty in some fields but not others");

  int best_d = -1;
  double best_spread = INFINITY;
  for (int d = 0; d <= n_max; ++d) {
    std::vector<double> r;
    for (auto [q, n] : counts) r.push_back(static_cast<double>(n) / std::pow(static_cast<double>(q), d));
    const double m = detail::median(r);
    double spread = 0;
    for (double v : r) spread = std::max(spread, std::fabs(v - m) / m);
    if (spread < best_spread - 1e-12) {
      best_spread = spread;
      best_d = d;
    }
  }
  const auto mu = fit_measure(counts, best_d, opts);
  if (!mu)
    throw EstimationError("no measure with denominator <= " + std::to_string(opts.max_den) +
                          " fits the counts at dimension " + std::to_string(best_d) + " within C = " +
                          std::to_string(opts.residual_threshold));
  const double residual = detail::max_residual(counts, best_d, *mu);
  if (residual > opts.residual_threshold)
    throw EstimationError("CDM residual " + std::to_string(residual) + " exceeds threshold " +
                          std::to_string(opts.residual_threshold));
  return {best_d, *mu, residual, fields};
}

/// Dimension suggested by a single count: the largest d <= n_max with
/// N >= dimension_split * q^(d - 1/2). Zero counts have no dimension.
inline std::optional<int> provisional_dimension(std::uint64_t q, std::uint64_t n, int n_max,
                                                const EstimateOptions& opts = {}) {
  if (n == 0) return std::nullopt;
  int d = 0;
  for (int c = 1; c <= n_max; ++c)
    if (static_cast<double>(n) >= opts.dimension_split * std::pow(static_cast<double>(q), c - 0.5)) d = c;
  return d;
}

/// Single-field invariants for a multiset of counts in F_q. Counts at the
/// same provisional dimension are clustered while all their error windows
/// share a point, and each cluster gets one measure. Returns the invariant for every input.
inline std::vector<DimMeasure> provisional_invariants(std::uint64_t q, const std::vector<std::uint64_t>& counts,
                                                      int n_max, const EstimateOptions& opts = {}) {
  std::map<std::uint64_t, std::optional<int>> dims;
  for (auto n : counts) dims.emplace(n, provisional_dimension(q, n, n_max, opts));
  std::map<std::uint64_t, DimMeasure> inv;
  std::vector<std::uint64_t> cluster;
  std::optional<int> cluster_dim;
  auto flush = [&] {
    if (cluster.empty()) return;
    std::vector<CountSample> samples;
    for (auto n : cluster) samples.emplace_back(q, n);
    DimMeasure dm;
    dm.dim = cluster_dim;
    dm.field_count = 1;
    auto mu = fit_measure(samples, *cluster_dim, opts);
    dm.measure = mu ? *mu : snap_rational(static_cast<double>(cluster.front()) / std::pow(static_cast<double>(q), *cluster_dim),
                                          opts.max_den);
    dm.fit_residual = detail::max_residual(samples, *cluster_dim, dm.measure);
    for (auto n : cluster) inv[n] = dm;
    cluster.clear();
  };
  for (const auto& [n, d] : dims) {
    if (!d) {
      inv[n] = DimMeasure::empty(1);
      continue;
    }
    const double gap_limit = 2 * opts.cluster_tolerance * std::pow(static_cast<double>(q), *d - 0.5);
    if (!cluster.empty() && (d != cluster_dim || static_cast<double>(n - cluster.front()) > gap_limit)) flush();
    cluster.push_back(n);
    cluster_dim = d;
  }
  flush();
  std::vector<DimMeasure> out;
  out.reserve(counts.size());
  for (auto n : counts) out.push_back(inv.at(n));
  return out;
}

// ---------------------------------------------------------------------------
// Parameter classification

struct ParameterClass {
  int id = 0;
  DimMeasure invariant;
  /// Member parameter tuples (indices into Classification::params[f]) per field.
  std::vector<std::vector<std::size_t>> members;
  std::optional<std::string> label;
  bool validated = false;
  std::string diagnostic;

  std::size_t size(std::size_t field) const { return members[field].size(); }
};

struct Classification {
  std::vector<FieldSpec> fields;
  std::vector<PointSet> params;                     // per field: F^|y|
  std::vector<std::vector<std::uint64_t>> counts;   // per field, per parameter
  std::vector<std::vector<int>> class_of;           // per field, per parameter
  std::vector<ParameterClass> classes;
  double c_fit = 0.0;  // largest residual across validated classes
};

namespace detail {

inline PointSet full_space(const FieldSpec& f, std::size_t arity, const CountOptions& opts) {
  check_budget(work_units(f.order(), arity, 0), opts, "parameter space over F_" + f.descriptor());
  PointSet ps{arity, {}};
  const std::uint64_t total = int_pow(f.order(), arity);
  ps.coords.resize(total * arity);
  for (std::uint64_t i = 0; i < total; ++i)
    unrank(i, f.order(), std::span<std::uint32_t>(ps.coords.data() + i * arity, arity));
  return ps;
}

}  // namespace detail

/// Groups every parameter tuple b by the invariant of S(x, b). Provisional
/// invariants come from single-field counts; each class is then re-estimated
/// from its counts across all fields and marked validated only if that
/// cross-field fit reproduces the class invariant.
inline Classification classify_parameters(const DefinableSet& s, const std::vector<FieldSpec>& fields,
                                          const EstimateOptions& est = {}, const CountOptions& opts = {}) {
  if (s.params.empty()) throw InvalidArgument("classify_parameters: the set has no parameter variables");
  Classification out;
  out.fields = fields;
  const int n_max = static_cast<int>(s.objects.size());

  std::map<std::pair<int, Rational>, int> key_to_class;  // dim -1 encodes empty
  for (std::size_t fi = 0; fi < fields.size(); ++fi) {
    const FieldSpec& f = fields[fi];
    PointSet ps = detail::full_space(f, s.params.size(), opts);
    check_budget(static_cast<double>(ps.size()) * work_units(f.order(), s.objects.size(), quantifier_depth(*s.formula)),
                 opts, "classification over F_" + f.descriptor());
    CompiledFormula c(*s.formula, f, s.slots());
    std::vector<std::uint64_t> counts(ps.size());
    parallel_for(ps.size(), [&](std::size_t i) {
      // one parameter per task; inner count runs single-threaded
      const auto fixed = ps.at(i);
      const std::uint64_t total = detail::int_pow(f.order(), s.objects.size());
      std::vector<std::uint32_t> env(c.slot_count(), 0);
      std::copy(fixed.begin(), fixed.end(), env.begin() + static_cast<std::ptrdiff_t>(s.objects.size()));
      std::span<std::uint32_t> objs(env.data(), s.objects.size());
      std::uint64_t n = 0;
      for (std::uint64_t idx = 0; idx < total; ++idx) {
        detail::unrank(idx, f.order(), objs);
        if (c.eval(env)) ++n;
      }
      counts[i] = n;
    });
    const auto inv = provisional_invariants(f.order(), counts, n_max, est);
    std::vector<int> cls(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const auto key = std::make_pair(inv[i].dim.value_or(-1), inv[i].is_empty() ? Rational{0} : inv[i].measure);
      auto [it, inserted] = key_to_class.emplace(key, static_cast<int>(out.classes.size()));
      if (inserted) {
        ParameterClass pc;
        pc.id = it->second;
        pc.invariant = inv[i];
        pc.invariant.fit_residual = 0;
        pc.members.assign(fields.size(), {});
        out.classes.push_back(std::move(pc));
      }
      cls[i] = it->second;
      out.classes[static_cast<std::size_t>(it->second)].members[fi].push_back(i);
    }
    out.params.push_back(std::move(ps));
    out.counts.push_back(std::move(counts));
    out.class_of.push_back(std::move(cls));
  }

  for (auto& pc : out.classes) {
    std::vector<CountSample> samples;
    std::vector<std::string> missing;
    for (std::size_t fi = 0; fi < fields.size(); ++fi) {
      if (pc.members[fi].empty()) missing.push_back(fields[fi].descriptor());
      for (auto i : pc.members[fi]) samples.emplace_back(fields[fi].order(), out.counts[fi][i]);
    }
    if (!missing.empty()) {
      pc.diagnostic = "class absent in F_" + missing.front() + (missing.size() > 1 ? " and others" : "");
      continue;
    }
    try {
      const DimMeasure dm = estimate_dim_measure(samples, n_max, est);
      if (!dm.same_invariant(pc.invariant)) {
        pc.diagnostic = "cross-field fit gives " + dm.str() + ", provisional " + pc.invariant.str();
        continue;
      }
      pc.invariant = dm;
      pc.validated = true;
      out.c_fit = std::max(out.c_fit, dm.fit_residual);
    } catch (const EstimationError& e) {
      pc.diagnostic = e.what();
    }
  }
  return out;
}

}  // namespace pfreg
