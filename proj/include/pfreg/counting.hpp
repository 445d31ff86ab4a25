#pragma once

// Exact point counting of definable sets over finite fields.
//
// Formulas are compiled once per field into a flat node array whose
// variables live in numbered slots; free variables take the first slots in
// the order given by the caller, bound variables follow. Quantifiers are
// evaluated by enumerating the whole field with short-circuiting.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pfreg/error.hpp"
#include "pfreg/field.hpp"
#include "pfreg/formula.hpp"
#include "pfreg/parallel.hpp"

namespace pfreg {

class CompiledFormula {
 public:
  CompiledFormula(const Formula& f, const FieldSpec& field, const std::vector<std::string>& free_slots)
      : field_(field), slot_names_(free_slots), free_count_(free_slots.size()) {
    std::vector<std::pair<std::string, std::uint32_t>> scope;
    for (std::uint32_t i = 0; i < free_slots.size(); ++i) scope.emplace_back(free_slots[i], i);
    root_ = compile(f, scope);
  }

  const FieldSpec& field() const noexcept { return field_; }
  std::size_t slot_count() const noexcept { return slot_names_.size(); }
  std::size_t free_count() const noexcept { return free_count_; }

  /// `env` must have slot_count() entries; the first free_count() are inputs,
  /// the rest are scratch space for bound variables.
  bool eval(std::span<std::uint32_t> env) const { return eval_formula(root_, env); }

 private:
  enum class TK : std::uint8_t { Slot, Const, Add, Mul, Neg };
  enum class FK : std::uint8_t { Eq, Not, And, Or, Exists, Forall };
  struct TNode {
    TK kind;
    std::uint32_t a = 0, b = 0;
  };
  struct FNode {
    FK kind;
    std::uint32_t a = 0, b = 0;  // children (term or formula indices); slot for quantifiers in b
  };

  std::uint32_t compile(const Term& t, const std::vector<std::pair<std::string, std::uint32_t>>& scope) {
    TNode node = std::visit(
        overloaded{
            [&](const term::Var& v) {
              for (auto it = scope.rbegin(); it != scope.rend(); ++it)
                if (it->first == v.name) return TNode{TK::Slot, it->second, 0};
              throw InvalidArgument("unbound variable '" + v.name + "'");
            },
            [&](const term::Literal& l) { return TNode{TK::Const, field_.from_decimal(l.digits).index, 0}; },
            [&](const term::FieldConst& c) {
              if (!(c.field == field_.tag()))
                throw InvalidArgument("constant from F_" + std::to_string(c.field.p) + "^" + std::to_string(c.field.k) +
                                      " used in F_" + field_.descriptor());
              return TNode{TK::Const, c.index, 0};
            },
            [&](const term::Sum& s) {
              auto a = compile(*s.lhs, scope);
              auto b = compile(*s.rhs, scope);
              return TNode{TK::Add, a, b};
            },
            [&](const term::Product& s) {
              auto a = compile(*s.lhs, scope);
              auto b = compile(*s.rhs, scope);
              return TNode{TK::Mul, a, b};
            },
            [&](const term::Negate& s) { return TNode{TK::Neg, compile(*s.arg, scope), 0}; },
        },
        t.node);
    terms_.push_back(node);
    return static_cast<std::uint32_t>(terms_.size() - 1);
  }

  std::uint32_t compile(const Formula& f, std::vector<std::pair<std::string, std::uint32_t>>& scope) {
    auto quant = [&](FK kind, const std::string& v, const Formula& body) {
      const auto slot = static_cast<std::uint32_t>(slot_names_.size());
      slot_names_.push_back(v);
      scope.emplace_back(v, slot);
      const auto b = compile(body, scope);
      scope.pop_back();
      return FNode{kind, b, slot};
    };
    FNode node = std::visit(overloaded{
                                [&](const fol::Equal& e) {
                                  auto a = compile(*e.lhs, scope);
                                  auto b = compile(*e.rhs, scope);
                                  return FNode{FK::Eq, a, b};
                                },
                                [&](const fol::Not& n) { return FNode{FK::Not, compile(*n.arg, scope), 0}; },
                                [&](const fol::And& c) {
                                  auto a = compile(*c.lhs, scope);
                                  auto b = compile(*c.rhs, scope);
                                  return FNode{FK::And, a, b};
                                },
                                [&](const fol::Or& c) {
                                  auto a = compile(*c.lhs, scope);
                                  auto b = compile(*c.rhs, scope);
                                  return FNode{FK::Or, a, b};
                                },
                                [&](const fol::Exists& q) { return quant(FK::Exists, q.var, *q.body); },
                                [&](const fol::Forall& q) { return quant(FK::Forall, q.var, *q.body); },
                            },
                            f.node);
    formulas_.push_back(node);
    return static_cast<std::uint32_t>(formulas_.size() - 1);
  }

  std::uint32_t eval_term(std::uint32_t i, std::span<std::uint32_t> env) const {
    const TNode& n = terms_[i];
    switch (n.kind) {
      case TK::Slot: return env[n.a];
      case TK::Const: return n.a;
      case TK::Add: return field_.add_raw(eval_term(n.a, env), eval_term(n.b, env));
      case TK::Mul: return field_.mul_raw(eval_term(n.a, env), eval_term(n.b, env));
      case TK::Neg: return field_.neg_raw(eval_term(n.a, env));
    }
    return 0;
  }

  bool eval_formula(std::uint32_t i, std::span<std::uint32_t> env) const {
    const FNode& n = formulas_[i];
    switch (n.kind) {
      case FK::Eq: return eval_term(n.a, env) == eval_term(n.b, env);
      case FK::Not: return !eval_formula(n.a, env);
      case FK::And: return eval_formula(n.a, env) && eval_formula(n.b, env);
      case FK::Or: return eval_formula(n.a, env) || eval_formula(n.b, env);
      case FK::Exists:
        for (std::uint32_t v = 0; v < field_.order(); ++v) {
          env[n.b] = v;
          if (eval_formula(n.a, env)) return true;
        }
        return false;
      case FK::Forall:
        for (std::uint32_t v = 0; v < field_.order(); ++v) {
          env[n.b] = v;
          if (!eval_formula(n.a, env)) return false;
        }
        return true;
    }
    return false;
  }

  FieldSpec field_;
  std::vector<std::string> slot_names_;
  std::size_t free_count_;
  std::vector<TNode> terms_;
  std::vector<FNode> formulas_;
  std::uint32_t root_ = 0;
};

/// Truth of a closed formula in `field`.
inline bool evaluate(const Formula& f, const FieldSpec& field) {
  const auto free = free_variables(f);
  if (!free.empty()) throw InvalidArgument("unbound variable '" + free.front() + "' in closed evaluation");
  CompiledFormula c(f, field, {});
  std::vector<std::uint32_t> env(c.slot_count(), 0);
  return c.eval(env);
}

/// A formula together with a split of its free variables into object
/// variables (counted) and parameter variables (fixed per fiber). Either
/// tuple may list variables that do not occur in the formula.
struct DefinableSet {
  FormulaPtr formula;
  std::vector<std::string> objects;
  std::vector<std::string> params;

  static DefinableSet make(FormulaPtr f, std::vector<std::string> objects, std::vector<std::string> params = {}) {
    for (const auto& o : objects) {
      if (std::count(objects.begin(), objects.end(), o) != 1) throw InvalidArgument("duplicate object variable '" + o + "'");
      if (std::find(params.begin(), params.end(), o) != params.end())
        throw InvalidArgument("variable '" + o + "' is both object and parameter");
    }
    for (const auto& p : params)
      if (std::count(params.begin(), params.end(), p) != 1) throw InvalidArgument("duplicate parameter variable '" + p + "'");
    for (const auto& v : free_variables(*f)) {
      if (std::find(objects.begin(), objects.end(), v) == objects.end() &&
          std::find(params.begin(), params.end(), v) == params.end())
        throw InvalidArgument("free variable '" + v + "' is neither object nor parameter");
    }
    return DefinableSet{std::move(f), std::move(objects), std::move(params)};
  }

  static DefinableSet parse(std::string_view text, std::vector<std::string> objects,
                            std::vector<std::string> params = {}) {
    return make(parse_formula(text), std::move(objects), std::move(params));
  }

  std::vector<std::string> slots() const {
    std::vector<std::string> s = objects;
    s.insert(s.end(), params.begin(), params.end());
    return s;
  }
};

struct CountOptions {
  /// Cap on q^(|objects| + quantifier depth) work units.
  double max_work = 1e9;
};

struct CountResult {
  std::string field;
  std::uint32_t q = 0;
  Binding params;
  std::uint64_t count = 0;
};

inline double work_units(std::uint32_t q, std::size_t free_vars, std::uint64_t depth) {
  return std::pow(static_cast<double>(q), static_cast<double>(free_vars + depth));
}

inline void check_budget(double work, const CountOptions& opts, const std::string& what) {
  if (work > opts.max_work) {
    throw BudgetExceeded(what + " needs " + std::to_string(static_cast<long double>(work)) +
                         " work units, above the cap of " + std::to_string(static_cast<long double>(opts.max_work)));
  }
}

namespace detail {

inline void unrank(std::uint64_t idx, std::uint32_t q, std::span<std::uint32_t> out) {
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = static_cast<std::uint32_t>(idx % q);
    idx /= q;
  }
}

inline std::uint64_t int_pow(std::uint64_t base, std::size_t e) {
  std::uint64_t r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= base;
  return r;
}

/// Counts object tuples satisfying `c` with the trailing slots preset to
/// `fixed`. Object tuples are enumerated lexicographically (first variable
/// outermost) and split into contiguous ranges across workers.
inline std::uint64_t count_compiled(const CompiledFormula& c, std::size_t arity, std::span<const std::uint32_t> fixed) {
  const std::uint32_t q = c.field().order();
  const std::uint64_t total = int_pow(q, arity);
  std::vector<std::uint64_t> partial(worker_count(), 0);
  parallel_chunks(total, [&](std::size_t begin, std::size_t end, unsigned w) {
    std::vector<std::uint32_t> env(c.slot_count(), 0);
    std::copy(fixed.begin(), fixed.end(), env.begin() + static_cast<std::ptrdiff_t>(arity));
    std::span<std::uint32_t> objs(env.data(), arity);
    std::uint64_t local = 0;
    for (std::uint64_t idx = begin; idx < end; ++idx) {
      unrank(idx, q, objs);
      if (c.eval(env)) ++local;
    }
    partial[w] = local;
  });
  std::uint64_t sum = 0;
  for (auto v : partial) sum += v;
  return sum;
}

inline std::vector<std::uint32_t> param_values(const DefinableSet& s, const Binding& params, const FieldSpec& field) {
  if (params.size() != s.params.size())
    throw InvalidArgument("parameter binding must bind exactly " + std::to_string(s.params.size()) + " variable(s)");
  std::vector<std::uint32_t> vals;
  for (const auto& name : s.params) {
    auto it = params.find(name);
    if (it == params.end()) throw InvalidArgument("parameter '" + name + "' is not bound");
    if (!field.contains(it->second))
      throw InvalidArgument("element " + std::to_string(it->second.index) + " not in F_" + field.descriptor());
    vals.push_back(it->second.index);
  }
  return vals;
}

}  // namespace detail

/// Exact number of object tuples a with S(a, params) true in `field`.
inline CountResult count_solutions(const DefinableSet& s, const FieldSpec& field, const Binding& params = {},
                                   const CountOptions& opts = {}) {
  const auto fixed = detail::param_values(s, params, field);
  check_budget(work_units(field.order(), s.objects.size(), quantifier_depth(*s.formula)), opts,
               "counting over F_" + field.descriptor());
  CompiledFormula c(*s.formula, field, s.slots());
  return {field.descriptor(), field.order(), params, detail::count_compiled(c, s.objects.size(), fixed)};
}

/// |E(x, a) ∧ E(x, b)|, counted directly from the substituted conjunction.
inline CountResult count_pair_intersection(const DefinableSet& e, const FieldSpec& field, const Binding& a,
                                           const Binding& b, const CountOptions& opts = {}) {
  detail::param_values(e, a, field);
  detail::param_values(e, b, field);
  // Binding keys must be free in the formula for substitute(); drop unused ones.
  const auto free = free_variables(*e.formula);
  auto restrict = [&](const Binding& in) {
    Binding out;
    for (const auto& [k, v] : in)
      if (std::find(free.begin(), free.end(), k) != free.end()) out.emplace(k, v);
    return out;
  };
  auto conj = land(substitute(e.formula, restrict(a), field), substitute(e.formula, restrict(b), field));
  auto r = count_solutions(DefinableSet::make(conj, e.objects), field, {}, opts);
  r.params.clear();
  return r;
}

/// One exact count per field, in input order. `params` is either empty
/// (no parameters) or has one binding per field.
inline std::vector<CountResult> count_sweep(const DefinableSet& s, const std::vector<FieldSpec>& fields,
                                            const std::vector<Binding>& params = {}, const CountOptions& opts = {}) {
  if (!params.empty() && params.size() != fields.size())
    throw InvalidArgument("count_sweep: need one parameter binding per field");
  std::vector<CountResult> out;
  out.reserve(fields.size());
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const Binding& b = params.empty() ? Binding{} : params[i];
    const std::string where = "F_" + fields[i].descriptor() + ": ";
    try {
      out.push_back(count_solutions(s, fields[i], b, opts));
    } catch (const BudgetExceeded& e) {
      throw BudgetExceeded(where + e.what());
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(where + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Point sets and fiber matrices

/// The F-points of a parameter-free definable set, as a flat list of tuples
/// in lexicographic order.
struct PointSet {
  std::size_t arity = 0;
  std::vector<std::uint32_t> coords;

  std::size_t size() const noexcept { return arity == 0 ? (coords.empty() ? 0 : coords.size()) : coords.size() / arity; }
  std::span<const std::uint32_t> at(std::size_t i) const { return {coords.data() + i * arity, arity}; }
};

inline PointSet enumerate_points(const DefinableSet& s, const FieldSpec& field, const CountOptions& opts = {}) {
  if (!s.params.empty()) throw InvalidArgument("enumerate_points: set must not have parameters");
  check_budget(work_units(field.order(), s.objects.size(), quantifier_depth(*s.formula)), opts,
               "enumerating points over F_" + field.descriptor());
  CompiledFormula c(*s.formula, field, s.slots());
  const std::size_t arity = s.objects.size();
  const std::uint64_t total = detail::int_pow(field.order(), arity);
  std::vector<std::vector<std::uint32_t>> parts(worker_count());
  parallel_chunks(total, [&](std::size_t begin, std::size_t end, unsigned w) {
    std::vector<std::uint32_t> env(c.slot_count(), 0);
    std::span<std::uint32_t> objs(env.data(), arity);
    for (std::uint64_t idx = begin; idx < end; ++idx) {
      detail::unrank(idx, field.order(), objs);
      if (c.eval(env)) parts[w].insert(parts[w].end(), objs.begin(), objs.end());
    }
  });
  PointSet out{arity, {}};
  for (auto& p : parts) out.coords.insert(out.coords.end(), p.begin(), p.end());
  if (arity == 0 && c.eval(std::span<std::uint32_t>())) out.coords.push_back(0);
  return out;
}

/// Dense boolean matrix with word-packed rows.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), words_((cols + 63) / 64), data_(rows * words_, 0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  void set(std::size_t r, std::size_t c) { data_[r * words_ + c / 64] |= std::uint64_t{1} << (c % 64); }
  bool get(std::size_t r, std::size_t c) const { return (data_[r * words_ + c / 64] >> (c % 64)) & 1u; }

  std::uint64_t row_count(std::size_t r) const {
    std::uint64_t n = 0;
    for (std::size_t w = 0; w < words_; ++w) n += static_cast<std::uint64_t>(__builtin_popcountll(data_[r * words_ + w]));
    return n;
  }

  /// |row r1 ∧ row r2|.
  std::uint64_t and_count(std::size_t r1, std::size_t r2) const {
    std::uint64_t n = 0;
    const std::uint64_t* a = &data_[r1 * words_];
    const std::uint64_t* b = &data_[r2 * words_];
    for (std::size_t w = 0; w < words_; ++w) n += static_cast<std::uint64_t>(__builtin_popcountll(a[w] & b[w]));
    return n;
  }

  /// |row r ∧ mask| for a mask of words() 64-bit words.
  std::uint64_t masked_count(std::size_t r, std::span<const std::uint64_t> mask) const {
    std::uint64_t n = 0;
    const std::uint64_t* a = &data_[r * words_];
    for (std::size_t w = 0; w < words_; ++w) n += static_cast<std::uint64_t>(__builtin_popcountll(a[w] & mask[w]));
    return n;
  }
  std::size_t words() const noexcept { return words_; }

  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (auto w : data_) n += static_cast<std::uint64_t>(__builtin_popcountll(w));
    return n;
  }

  BitMatrix transposed() const {
    BitMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c)
        if (get(r, c)) t.set(c, r);
    return t;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0, words_ = 0;
  std::vector<std::uint64_t> data_;
};

/// Row a (indexing params) has bit x set iff E(objects[x], params[a]).
/// Rows are filled in parallel.
inline BitMatrix fiber_matrix(const DefinableSet& e, const FieldSpec& field, const PointSet& objects,
                              const PointSet& params, const CountOptions& opts = {}) {
  if (objects.arity != e.objects.size() || params.arity != e.params.size())
    throw InvalidArgument("fiber_matrix: point arities do not match the definable set");
  const double work = static_cast<double>(objects.size()) * static_cast<double>(params.size()) *
                      std::pow(static_cast<double>(field.order()), static_cast<double>(quantifier_depth(*e.formula)));
  check_budget(work, opts, "fiber matrix over F_" + field.descriptor());
  CompiledFormula c(*e.formula, field, e.slots());
  BitMatrix m(params.size(), objects.size());
  const std::size_t nx = objects.arity;
  parallel_chunks(params.size(), [&](std::size_t begin, std::size_t end, unsigned) {
    std::vector<std::uint32_t> env(c.slot_count(), 0);
    for (std::size_t a = begin; a < end; ++a) {
      auto pa = params.at(a);
      std::copy(pa.begin(), pa.end(), env.begin() + static_cast<std::ptrdiff_t>(nx));
      for (std::size_t x = 0; x < objects.size(); ++x) {
        auto px = objects.at(x);
        std::copy(px.begin(), px.end(), env.begin());
        if (c.eval(env)) m.set(a, x);
      }
    }
  });
  return m;
}

}  // namespace pfreg
