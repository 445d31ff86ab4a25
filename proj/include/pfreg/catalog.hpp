#pragma once

// Fixed catalog of definable predicates used to name partition blocks and
// parameter classes by exact extensional comparison.

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pfreg/counting.hpp"
#include "pfreg/field.hpp"

namespace pfreg {

struct CatalogPredicate {
  std::string name;
  std::function<bool(const FieldSpec&, std::span<const std::uint32_t>)> holds;
};

namespace detail {

inline bool is_power_residue(const FieldSpec& f, std::uint32_t a, std::uint64_t r) {
  if (a == 0) return false;
  const std::uint64_t n = f.order() - 1;
  const std::uint64_t g = std::gcd(r, n);
  return f.pow(FieldElement{a}, n / g) == f.one();
}

inline std::string power_name(std::uint64_t r) {
  switch (r) {
    case 2: return "squares";
    case 3: return "cubes";
    default: return std::to_string(r) + "th powers";
  }
}

struct Monomial {
  std::array<int, 2> exps;
};

inline std::string monomial_name(const Monomial& m, const std::vector<std::string>& vars) {
  std::string out;
  for (std::size_t v = 0; v < vars.size(); ++v) {
    if (m.exps[v] == 0) continue;
    if (!out.empty()) out += "*";
    out += vars[v];
    if (m.exps[v] > 1) out += "^" + std::to_string(m.exps[v]);
  }
  return out.empty() ? "1" : out;
}

}  // namespace detail

/// Candidate predicates on tuples of the given arity, most specific last:
/// the trivial predicate; for one variable, nonzero r-th powers and their
/// complement in F^x (r = 2, 3, 4); for up to two variables, the zero set
/// and the nonvanishing set of every polynomial of degree <= 2 with
/// coefficients in {-1, 0, 1}.
inline std::vector<CatalogPredicate> predicate_catalog(const std::vector<std::string>& vars,
                                                     const std::string& trivial_name = "all of W") {
  std::vector<CatalogPredicate> out;
  const std::size_t arity = vars.size();
  out.push_back({trivial_name, [](const FieldSpec&, std::span<const std::uint32_t>) { return true; }});
  if (arity == 1) {
    for (std::uint64_t r = 2; r <= 4; ++r) {
      out.push_back({"nonzero " + detail::power_name(r), [r](const FieldSpec& f, std::span<const std::uint32_t> a) {
                       return detail::is_power_residue(f, a[0], r);
                     }});
      out.push_back({(r == 4 ? "non-" : "non") + detail::power_name(r), [r](const FieldSpec& f, std::span<const std::uint32_t> a) {
                       return a[0] != 0 && !detail::is_power_residue(f, a[0], r);
                     }});
    }
  }
  if (arity >= 1 && arity <= 2) {
    std::vector<detail::Monomial> monos;
    for (int deg = 0; deg <= 2; ++deg) {
      if (arity == 1) {
        monos.push_back({{deg, 0}});
      } else {
        for (int e0 = deg; e0 >= 0; --e0) monos.push_back({{e0, deg - e0}});
      }
    }
    struct Poly {
      std::vector<int> coeffs;
      int terms;
      int degree;
    };
    std::vector<Poly> polys;
    std::size_t combos = 1;
    for (std::size_t i = 0; i < monos.size(); ++i) combos *= 3;
    for (std::size_t c = 1; c < combos; ++c) {
      std::vector<int> coeffs(monos.size());
      std::size_t v = c;
      for (auto& x : coeffs) {
        x = static_cast<int>(v % 3) - 1;
        v /= 3;
      }
      // f and -f have the same zero set; keep the one whose highest nonzero term is positive.
      int lead = 0, degree = 0, terms = 0;
      for (std::size_t i = 0; i < coeffs.size(); ++i) {
        if (coeffs[i] == 0) continue;
        lead = coeffs[i];
        degree = std::max(degree, monos[i].exps[0] + monos[i].exps[1]);
        ++terms;
      }
      if (lead < 0) continue;
      polys.push_back({coeffs, terms, degree});
    }
    std::stable_sort(polys.begin(), polys.end(), [](const Poly& a, const Poly& b) {
      return std::pair(a.terms, a.degree) < std::pair(b.terms, b.degree);
    });
    for (const auto& p : polys) {
      std::string name;
      for (std::size_t i = monos.size(); i-- > 0;) {
        if (p.coeffs[i] == 0) continue;
        const std::string m = detail::monomial_name(monos[i], vars);
        if (name.empty()) {
          name = (p.coeffs[i] < 0 ? "-" : "") + m;
        } else {
          name += (p.coeffs[i] < 0 ? " - " : " + ") + m;
        }
      }
      auto eval = [monos, coeffs = p.coeffs](const FieldSpec& f, std::span<const std::uint32_t> a) {
        std::uint32_t acc = 0;
        for (std::size_t i = 0; i < monos.size(); ++i) {
          if (coeffs[i] == 0) continue;
          std::uint32_t t = 1;
          for (std::size_t v = 0; v < a.size(); ++v)
            for (int e = 0; e < monos[i].exps[v]; ++e) t = f.mul_raw(t, a[v]);
          acc = f.add_raw(acc, coeffs[i] > 0 ? t : f.neg_raw(t));
        }
        return acc;
      };
      out.push_back({"zero set of " + name, [eval](const FieldSpec& f, std::span<const std::uint32_t> a) {
                       return eval(f, a) == 0;
                     }});
      out.push_back({"nonvanishing of " + name, [eval](const FieldSpec& f, std::span<const std::uint32_t> a) {
                       return eval(f, a) != 0;
                     }});
    }
  }
  return out;
}

/// First catalog predicate whose extension within `universe[f]` equals
/// `members[f]` (indices into universe[f]) in every field.
inline std::optional<std::string> match_label(const std::vector<CatalogPredicate>& catalog,
                                              const std::vector<FieldSpec>& fields,
                                              const std::vector<PointSet>& universe,
                                              const std::vector<std::vector<std::size_t>>& members) {
  std::vector<std::vector<char>> in_block(fields.size());
  for (std::size_t f = 0; f < fields.size(); ++f) {
    in_block[f].assign(universe[f].size(), 0);
    for (auto i : members[f]) in_block[f][i] = 1;
  }
  for (const auto& pred : catalog) {
    bool ok = true;
    for (std::size_t f = 0; f < fields.size() && ok; ++f)
      for (std::size_t i = 0; i < universe[f].size() && ok; ++i)
        ok = pred.holds(fields[f], universe[f].at(i)) == static_cast<bool>(in_block[f][i]);
    if (ok) return pred.name;
  }
  return std::nullopt;
}

}  // namespace pfreg
