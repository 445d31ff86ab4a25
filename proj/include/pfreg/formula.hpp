#pragma once

// First-order formulas in the language of rings: AST, parser, printer and
// structural queries.
//
// Grammar (whitespace insignificant, `#` starts a comment to end of line):
//
//   formula     := implication
//   implication := disjunction [ "->" implication ]
//   disjunction := conjunction { "|" conjunction }
//   conjunction := unary { "&" unary }
//   unary       := "!" unary | ("E" | "A") ident "." formula | "(" formula ")" | atom
//   atom        := term "=" term
//   term        := product { ("+" | "-") product }
//   product     := factor { "*" factor }
//   factor      := "-" factor | ident | integer | "(" term ")"
//
// A quantifier body extends as far right as possible, i.e. to the end of the
// enclosing parenthesis. `a -> b` is stored as `!a | b`. A quantifier that
// rebinds a name already bound on the current path gets a fresh name.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "pfreg/error.hpp"
#include "pfreg/field.hpp"

namespace pfreg {

struct Term;
struct Formula;
using TermPtr = std::shared_ptr<const Term>;
using FormulaPtr = std::shared_ptr<const Formula>;

namespace term {
struct Var {
  std::string name;
};
/// Nonnegative integer literal, kept as decimal digits (arbitrary precision).
struct Literal {
  std::string digits;
};
/// A field element introduced by substitution; only valid in its own field.
struct FieldConst {
  FieldTag field;
  std::uint32_t index;
};
struct Sum {
  TermPtr lhs, rhs;
};
struct Product {
  TermPtr lhs, rhs;
};
struct Negate {
  TermPtr arg;
};
}  // namespace term

struct Term {
  std::variant<term::Var, term::Literal, term::FieldConst, term::Sum, term::Product, term::Negate> node;
};

namespace fol {
struct Equal {
  TermPtr lhs, rhs;
};
struct Not {
  FormulaPtr arg;
};
struct And {
  FormulaPtr lhs, rhs;
};
struct Or {
  FormulaPtr lhs, rhs;
};
struct Exists {
  std::string var;
  FormulaPtr body;
};
struct Forall {
  std::string var;
  FormulaPtr body;
};
}  // namespace fol

struct Formula {
  std::variant<fol::Equal, fol::Not, fol::And, fol::Or, fol::Exists, fol::Forall> node;
};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Constructors.
inline TermPtr var(std::string name) { return std::make_shared<const Term>(Term{term::Var{std::move(name)}}); }
inline TermPtr lit(std::uint64_t v) { return std::make_shared<const Term>(Term{term::Literal{std::to_string(v)}}); }
inline TermPtr lit_digits(std::string digits) {
  return std::make_shared<const Term>(Term{term::Literal{std::move(digits)}});
}
inline TermPtr field_const(const FieldSpec& f, FieldElement e) {
  return std::make_shared<const Term>(Term{term::FieldConst{f.tag(), e.index}});
}
inline TermPtr sum(TermPtr a, TermPtr b) { return std::make_shared<const Term>(Term{term::Sum{std::move(a), std::move(b)}}); }
inline TermPtr product(TermPtr a, TermPtr b) {
  return std::make_shared<const Term>(Term{term::Product{std::move(a), std::move(b)}});
}
inline TermPtr negate(TermPtr a) { return std::make_shared<const Term>(Term{term::Negate{std::move(a)}}); }

inline FormulaPtr equal(TermPtr a, TermPtr b) {
  return std::make_shared<const Formula>(Formula{fol::Equal{std::move(a), std::move(b)}});
}
inline FormulaPtr lnot(FormulaPtr a) { return std::make_shared<const Formula>(Formula{fol::Not{std::move(a)}}); }
inline FormulaPtr land(FormulaPtr a, FormulaPtr b) {
  return std::make_shared<const Formula>(Formula{fol::And{std::move(a), std::move(b)}});
}
inline FormulaPtr lor(FormulaPtr a, FormulaPtr b) {
  return std::make_shared<const Formula>(Formula{fol::Or{std::move(a), std::move(b)}});
}
inline FormulaPtr exists(std::string v, FormulaPtr body) {
  return std::make_shared<const Formula>(Formula{fol::Exists{std::move(v), std::move(body)}});
}
inline FormulaPtr forall(std::string v, FormulaPtr body) {
  return std::make_shared<const Formula>(Formula{fol::Forall{std::move(v), std::move(body)}});
}

/// Upper bound on formula size, compared against complexity().
struct ComplexityBudget {
  std::uint64_t max_complexity = 0;
};

// ---------------------------------------------------------------------------
// Structural queries

inline std::uint64_t complexity(const Term& t) {
  return std::visit(overloaded{
                        [](const term::Var&) -> std::uint64_t { return 1; },
                        [](const term::Literal&) -> std::uint64_t { return 1; },
                        [](const term::FieldConst&) -> std::uint64_t { return 1; },
                        [](const term::Sum& s) { return 1 + complexity(*s.lhs) + complexity(*s.rhs); },
                        [](const term::Product& s) { return 1 + complexity(*s.lhs) + complexity(*s.rhs); },
                        [](const term::Negate& s) { return 1 + complexity(*s.arg); },
                    },
                    t.node);
}

/// Total AST node count: terms, connectives and quantifiers.
inline std::uint64_t complexity(const Formula& f) {
  return std::visit(overloaded{
                        [](const fol::Equal& e) { return 1 + complexity(*e.lhs) + complexity(*e.rhs); },
                        [](const fol::Not& n) { return 1 + complexity(*n.arg); },
                        [](const fol::And& c) { return 1 + complexity(*c.lhs) + complexity(*c.rhs); },
                        [](const fol::Or& c) { return 1 + complexity(*c.lhs) + complexity(*c.rhs); },
                        [](const fol::Exists& q) { return 1 + complexity(*q.body); },
                        [](const fol::Forall& q) { return 1 + complexity(*q.body); },
                    },
                    f.node);
}

inline bool within_budget(const Formula& f, ComplexityBudget budget) {
  return complexity(f) <= budget.max_complexity;
}

inline std::uint64_t quantifier_depth(const Formula& f) {
  return std::visit(overloaded{
                        [](const fol::Equal&) -> std::uint64_t { return 0; },
                        [](const fol::Not& n) { return quantifier_depth(*n.arg); },
                        [](const fol::And& c) { return std::max(quantifier_depth(*c.lhs), quantifier_depth(*c.rhs)); },
                        [](const fol::Or& c) { return std::max(quantifier_depth(*c.lhs), quantifier_depth(*c.rhs)); },
                        [](const fol::Exists& q) { return 1 + quantifier_depth(*q.body); },
                        [](const fol::Forall& q) { return 1 + quantifier_depth(*q.body); },
                    },
                    f.node);
}

namespace detail {

inline void collect_free(const Term& t, const std::vector<std::string>& bound, std::vector<std::string>& out) {
  std::visit(overloaded{
                 [&](const term::Var& v) {
                   if (std::find(bound.begin(), bound.end(), v.name) != bound.end()) return;
                   if (std::find(out.begin(), out.end(), v.name) == out.end()) out.push_back(v.name);
                 },
                 [](const term::Literal&) {},
                 [](const term::FieldConst&) {},
                 [&](const term::Sum& s) {
                   collect_free(*s.lhs, bound, out);
                   collect_free(*s.rhs, bound, out);
                 },
                 [&](const term::Product& s) {
                   collect_free(*s.lhs, bound, out);
                   collect_free(*s.rhs, bound, out);
                 },
                 [&](const term::Negate& s) { collect_free(*s.arg, bound, out); },
             },
             t.node);
}

inline void collect_free(const Formula& f, std::vector<std::string>& bound, std::vector<std::string>& out) {
  std::visit(overloaded{
                 [&](const fol::Equal& e) {
                   collect_free(*e.lhs, bound, out);
                   collect_free(*e.rhs, bound, out);
                 },
                 [&](const fol::Not& n) { collect_free(*n.arg, bound, out); },
                 [&](const fol::And& c) {
                   collect_free(*c.lhs, bound, out);
                   collect_free(*c.rhs, bound, out);
                 },
                 [&](const fol::Or& c) {
                   collect_free(*c.lhs, bound, out);
                   collect_free(*c.rhs, bound, out);
                 },
                 [&](const fol::Exists& q) {
                   bound.push_back(q.var);
                   collect_free(*q.body, bound, out);
                   bound.pop_back();
                 },
                 [&](const fol::Forall& q) {
                   bound.push_back(q.var);
                   collect_free(*q.body, bound, out);
                   bound.pop_back();
                 },
             },
             f.node);
}

}  // namespace detail

/// Free variables in order of first occurrence (left to right).
inline std::vector<std::string> free_variables(const Formula& f) {
  std::vector<std::string> bound, out;
  detail::collect_free(f, bound, out);
  return out;
}

namespace detail {

using Renaming = std::vector<std::pair<std::string, std::string>>;

inline bool alpha_equal(const Term& a, const Term& b, const Renaming& ren) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      overloaded{
          [&](const term::Var& x) {
            const auto& y = std::get<term::Var>(b.node);
            for (auto it = ren.rbegin(); it != ren.rend(); ++it) {
              const bool l = it->first == x.name, r = it->second == y.name;
              if (l || r) return l && r;
            }
            return x.name == y.name;
          },
          [&](const term::Literal& x) {
            auto strip = [](const std::string& s) {
              auto pos = s.find_first_not_of('0');
              return pos == std::string::npos ? std::string("0") : s.substr(pos);
            };
            return strip(x.digits) == strip(std::get<term::Literal>(b.node).digits);
          },
          [&](const term::FieldConst& x) {
            const auto& y = std::get<term::FieldConst>(b.node);
            return x.field == y.field && x.index == y.index;
          },
          [&](const term::Sum& x) {
            const auto& y = std::get<term::Sum>(b.node);
            return alpha_equal(*x.lhs, *y.lhs, ren) && alpha_equal(*x.rhs, *y.rhs, ren);
          },
          [&](const term::Product& x) {
            const auto& y = std::get<term::Product>(b.node);
            return alpha_equal(*x.lhs, *y.lhs, ren) && alpha_equal(*x.rhs, *y.rhs, ren);
          },
          [&](const term::Negate& x) { return alpha_equal(*x.arg, *std::get<term::Negate>(b.node).arg, ren); },
      },
      a.node);
}

inline bool alpha_equal(const Formula& a, const Formula& b, Renaming& ren) {
  if (a.node.index() != b.node.index()) return false;
  auto quant = [&](const std::string& va, const FormulaPtr& ba, const std::string& vb, const FormulaPtr& bb) {
    ren.emplace_back(va, vb);
    const bool r = alpha_equal(*ba, *bb, ren);
    ren.pop_back();
    return r;
  };
  return std::visit(overloaded{
                        [&](const fol::Equal& x) {
                          const auto& y = std::get<fol::Equal>(b.node);
                          return alpha_equal(*x.lhs, *y.lhs, ren) && alpha_equal(*x.rhs, *y.rhs, ren);
                        },
                        [&](const fol::Not& x) { return alpha_equal(*x.arg, *std::get<fol::Not>(b.node).arg, ren); },
                        [&](const fol::And& x) {
                          const auto& y = std::get<fol::And>(b.node);
                          return alpha_equal(*x.lhs, *y.lhs, ren) && alpha_equal(*x.rhs, *y.rhs, ren);
                        },
                        [&](const fol::Or& x) {
                          const auto& y = std::get<fol::Or>(b.node);
                          return alpha_equal(*x.lhs, *y.lhs, ren) && alpha_equal(*x.rhs, *y.rhs, ren);
                        },
                        [&](const fol::Exists& x) {
                          const auto& y = std::get<fol::Exists>(b.node);
                          return quant(x.var, x.body, y.var, y.body);
                        },
                        [&](const fol::Forall& x) {
                          const auto& y = std::get<fol::Forall>(b.node);
                          return quant(x.var, x.body, y.var, y.body);
                        },
                    },
                    a.node);
}

}  // namespace detail

/// Structural equality up to renaming of bound variables.
inline bool alpha_equal(const Formula& a, const Formula& b) {
  detail::Renaming ren;
  return detail::alpha_equal(a, b, ren);
}

/// Exact structural equality (bound names must match too).
inline bool operator==(const Term& a, const Term& b) { return detail::alpha_equal(a, b, {}); }

// ---------------------------------------------------------------------------
// Printer

namespace detail {

// Term precedence: 0 sum, 1 product, 2 unary minus, 3 atom.
inline void print_term(const Term& t, int ctx, std::string& out) {
  std::visit(overloaded{
                 [&](const term::Var& v) { out += v.name; },
                 [&](const term::Literal& l) { out += l.digits; },
                 [&](const term::FieldConst& c) {
                   if (c.field.k == 1) {
                     out += std::to_string(c.index);
                   } else {
                     out += "{" + std::to_string(c.field.p) + "^" + std::to_string(c.field.k) + ":" +
                            std::to_string(c.index) + "}";
                   }
                 },
                 [&](const term::Sum& s) {
                   if (ctx > 0) out += '(';
                   print_term(*s.lhs, 0, out);
                   if (const auto* n = std::get_if<term::Negate>(&s.rhs->node)) {
                     out += " - ";
                     print_term(*n->arg, 1, out);
                   } else {
                     out += " + ";
                     print_term(*s.rhs, 1, out);
                   }
                   if (ctx > 0) out += ')';
                 },
                 [&](const term::Product& s) {
                   if (ctx > 1) out += '(';
                   print_term(*s.lhs, 1, out);
                   out += '*';
                   print_term(*s.rhs, 2, out);
                   if (ctx > 1) out += ')';
                 },
                 [&](const term::Negate& n) {
                   if (ctx > 2) out += '(';
                   out += '-';
                   print_term(*n.arg, 2, out);
                   if (ctx > 2) out += ')';
                 },
             },
             t.node);
}

// Formula precedence: 0 implication/quantifier, 1 or, 2 and, 3 unary.
inline void print_formula(const Formula& f, int ctx, std::string& out) {
  auto quant = [&](char q, const std::string& v, const Formula& body) {
    if (ctx > 0) out += '(';
    out += q;
    out += ' ';
    out += v;
    out += ". ";
    print_formula(body, 0, out);
    if (ctx > 0) out += ')';
  };
  std::visit(overloaded{
                 [&](const fol::Equal& e) {
                   print_term(*e.lhs, 0, out);
                   out += " = ";
                   print_term(*e.rhs, 0, out);
                 },
                 [&](const fol::Not& n) {
                   out += '!';
                   print_formula(*n.arg, 3, out);
                 },
                 [&](const fol::And& c) {
                   if (ctx > 2) out += '(';
                   print_formula(*c.lhs, 2, out);
                   out += " & ";
                   print_formula(*c.rhs, 3, out);
                   if (ctx > 2) out += ')';
                 },
                 [&](const fol::Or& c) {
                   if (ctx > 1) out += '(';
                   print_formula(*c.lhs, 1, out);
                   out += " | ";
                   print_formula(*c.rhs, 2, out);
                   if (ctx > 1) out += ')';
                 },
                 [&](const fol::Exists& q) { quant('E', q.var, *q.body); },
                 [&](const fol::Forall& q) { quant('A', q.var, *q.body); },
             },
             f.node);
}

}  // namespace detail

inline std::string to_string(const Term& t) {
  std::string out;
  detail::print_term(t, 0, out);
  return out;
}

inline std::string to_string(const Formula& f) {
  std::string out;
  detail::print_formula(f, 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parser

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view text) : src_(text) {
    tokenize();
    for (const auto& t : toks_)
      if (t.kind == Tok::Ident) names_.insert(std::string(t.text));
  }

  FormulaPtr parse() {
    FormulaPtr f = formula();
    if (peek().kind != Tok::End) fail("unexpected '" + std::string(peek().text) + "'");
    return f;
  }

 private:
  enum class Tok { Ident, Int, Plus, Minus, Star, Eq, Bang, Amp, Bar, Arrow, LParen, RParen, Dot, End };
  struct Token {
    Tok kind;
    std::string_view text;
    std::size_t pos;
  };

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, peek().pos); }

  void tokenize() {
    std::size_t i = 0;
    auto is_alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
    auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
    while (i < src_.size()) {
      const char c = src_[i];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++i;
      } else if (c == '#') {
        while (i < src_.size() && src_[i] != '\n') ++i;
      } else if (is_alpha(c)) {
        std::size_t j = i + 1;
        while (j < src_.size() && (is_alpha(src_[j]) || is_digit(src_[j]) || src_[j] == '_')) ++j;
        toks_.push_back({Tok::Ident, src_.substr(i, j - i), i});
        i = j;
      } else if (is_digit(c)) {
        std::size_t j = i + 1;
        while (j < src_.size() && is_digit(src_[j])) ++j;
        toks_.push_back({Tok::Int, src_.substr(i, j - i), i});
        i = j;
      } else if (c == '-' && i + 1 < src_.size() && src_[i + 1] == '>') {
        toks_.push_back({Tok::Arrow, src_.substr(i, 2), i});
        i += 2;
      } else {
        Tok k;
        switch (c) {
          case '+': k = Tok::Plus; break;
          case '-': k = Tok::Minus; break;
          case '*': k = Tok::Star; break;
          case '=': k = Tok::Eq; break;
          case '!': k = Tok::Bang; break;
          case '&': k = Tok::Amp; break;
          case '|': k = Tok::Bar; break;
          case '(': k = Tok::LParen; break;
          case ')': k = Tok::RParen; break;
          case '.': k = Tok::Dot; break;
          default: throw ParseError(std::string("unexpected character '") + c + "'", i);
        }
        toks_.push_back({k, src_.substr(i, 1), i});
        ++i;
      }
    }
    toks_.push_back({Tok::End, "end of input", src_.size()});
  }

  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  bool accept(Tok k) {
    if (peek().kind != k) return false;
    ++pos_;
    return true;
  }
  void expect(Tok k, const char* what) {
    if (!accept(k)) fail(std::string("expected ") + what + ", found '" + std::string(peek().text) + "'");
  }

  FormulaPtr formula() {
    FormulaPtr lhs = disjunction();
    if (accept(Tok::Arrow)) return lor(lnot(std::move(lhs)), formula());
    return lhs;
  }

  FormulaPtr disjunction() {
    FormulaPtr f = conjunction();
    while (accept(Tok::Bar)) f = lor(std::move(f), conjunction());
    return f;
  }

  FormulaPtr conjunction() {
    FormulaPtr f = unary();
    while (accept(Tok::Amp)) f = land(std::move(f), unary());
    return f;
  }

  bool at_quantifier() const {
    const Token& t = peek();
    return t.kind == Tok::Ident && (t.text == "E" || t.text == "A") && peek(1).kind == Tok::Ident &&
           peek(2).kind == Tok::Dot;
  }

  FormulaPtr unary() {
    if (accept(Tok::Bang)) return lnot(unary());
    if (at_quantifier()) {
      const bool is_exists = peek().text == "E";
      ++pos_;
      const std::string written(peek().text);
      ++pos_;
      ++pos_;  // '.'
      std::string actual = written;
      if (is_bound(written)) actual = fresh(written);
      scopes_.emplace_back(written, actual);
      FormulaPtr body = formula();
      scopes_.pop_back();
      return is_exists ? exists(actual, std::move(body)) : forall(actual, std::move(body));
    }
    if (peek().kind == Tok::LParen) {
      // Either a parenthesized formula or an atom whose left term starts with '('.
      const std::size_t save = pos_;
      try {
        return atom();
      } catch (const ParseError& atom_error) {
        pos_ = save;
        ++pos_;
        FormulaPtr f;
        try {
          f = formula();
          expect(Tok::RParen, "')'");
        } catch (const ParseError& formula_error) {
          throw(formula_error.position() >= atom_error.position() ? formula_error : atom_error);
        }
        return f;
      }
    }
    return atom();
  }

  FormulaPtr atom() {
    TermPtr lhs = term_expr();
    expect(Tok::Eq, "'='");
    TermPtr rhs = term_expr();
    return equal(std::move(lhs), std::move(rhs));
  }

  TermPtr term_expr() {
    TermPtr t = product_expr();
    for (;;) {
      if (accept(Tok::Plus)) {
        t = sum(std::move(t), product_expr());
      } else if (accept(Tok::Minus)) {
        t = sum(std::move(t), negate(product_expr()));
      } else {
        return t;
      }
    }
  }

  TermPtr product_expr() {
    TermPtr t = factor();
    while (accept(Tok::Star)) t = product(std::move(t), factor());
    return t;
  }

  TermPtr factor() {
    if (accept(Tok::Minus)) return negate(factor());
    const Token& t = peek();
    if (t.kind == Tok::Ident) {
      ++pos_;
      return var(resolve(std::string(t.text)));
    }
    if (t.kind == Tok::Int) {
      ++pos_;
      return lit_digits(std::string(t.text));
    }
    if (accept(Tok::LParen)) {
      TermPtr inner = term_expr();
      expect(Tok::RParen, "')'");
      return inner;
    }
    fail("expected a term, found '" + std::string(t.text) + "'");
  }

  bool is_bound(const std::string& name) const {
    for (const auto& s : scopes_)
      if (s.first == name || s.second == name) return true;
    return false;
  }

  std::string resolve(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it)
      if (it->first == name) return it->second;
    return name;
  }

  std::string fresh(const std::string& base) {
    for (int i = 1; i < 1'000'000; ++i) {
      std::string cand = base + "_" + std::to_string(i);
      if (names_.count(cand) == 0 && !is_bound(cand)) {
        names_.insert(cand);
        return cand;
      }
    }
    fail("cannot rename rebound variable '" + base + "'");
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::set<std::string> names_;
  std::vector<std::pair<std::string, std::string>> scopes_;  // written -> actual
};

}  // namespace detail

inline FormulaPtr parse_formula(std::string_view text) { return detail::Parser(text).parse(); }

// ---------------------------------------------------------------------------
// Substitution

using Binding = std::map<std::string, FieldElement>;

namespace detail {

inline TermPtr substitute(const TermPtr& t, const Binding& b, const std::vector<std::string>& bound,
                          const FieldSpec& field) {
  return std::visit(overloaded{
                        [&](const term::Var& v) -> TermPtr {
                          if (std::find(bound.begin(), bound.end(), v.name) != bound.end()) return t;
                          auto it = b.find(v.name);
                          return it == b.end() ? t : field_const(field, it->second);
                        },
                        [&](const term::Literal&) -> TermPtr { return t; },
                        [&](const term::FieldConst&) -> TermPtr { return t; },
                        [&](const term::Sum& s) -> TermPtr {
                          return sum(substitute(s.lhs, b, bound, field), substitute(s.rhs, b, bound, field));
                        },
                        [&](const term::Product& s) -> TermPtr {
                          return product(substitute(s.lhs, b, bound, field), substitute(s.rhs, b, bound, field));
                        },
                        [&](const term::Negate& s) -> TermPtr { return negate(substitute(s.arg, b, bound, field)); },
                    },
                    t->node);
}

inline FormulaPtr substitute(const FormulaPtr& f, const Binding& b, std::vector<std::string>& bound,
                             const FieldSpec& field) {
  return std::visit(overloaded{
                        [&](const fol::Equal& e) {
                          return equal(substitute(e.lhs, b, bound, field), substitute(e.rhs, b, bound, field));
                        },
                        [&](const fol::Not& n) { return lnot(substitute(n.arg, b, bound, field)); },
                        [&](const fol::And& c) {
                          return land(substitute(c.lhs, b, bound, field), substitute(c.rhs, b, bound, field));
                        },
                        [&](const fol::Or& c) {
                          return lor(substitute(c.lhs, b, bound, field), substitute(c.rhs, b, bound, field));
                        },
                        [&](const fol::Exists& q) {
                          bound.push_back(q.var);
                          auto body = substitute(q.body, b, bound, field);
                          bound.pop_back();
                          return exists(q.var, std::move(body));
                        },
                        [&](const fol::Forall& q) {
                          bound.push_back(q.var);
                          auto body = substitute(q.body, b, bound, field);
                          bound.pop_back();
                          return forall(q.var, std::move(body));
                        },
                    },
                    f->node);
}

}  // namespace detail

/// Replaces the free variables named in `binding` by constants of `field`.
/// Bound occurrences are left alone.
inline FormulaPtr substitute(const FormulaPtr& f, const Binding& binding, const FieldSpec& field) {
  const auto free = free_variables(*f);
  for (const auto& [name, value] : binding) {
    if (std::find(free.begin(), free.end(), name) == free.end())
      throw InvalidArgument("substitution for unknown variable '" + name + "'");
    if (!field.contains(value))
      throw InvalidArgument("element " + std::to_string(value.index) + " not in F_" + field.descriptor());
  }
  if (binding.empty()) return f;
  std::vector<std::string> bound;
  return detail::substitute(f, binding, bound, field);
}

}  // namespace pfreg
