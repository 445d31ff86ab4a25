#pragma once

// Finite fields F_p and F_{p^k}: construction, arithmetic, enumeration.
//
// Elements are addressed by a dense index in [0, q): the coefficient vector
// (c_0, ..., c_{k-1}) of the residue polynomial maps to sum c_i p^i. Index 0
// is zero and index 1 is one, so enumeration starts 0, 1, ...

#include <algorithm>
#include <charconv>
#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pfreg/error.hpp"

namespace pfreg {

struct FieldElement {
  std::uint32_t index = 0;
  friend auto operator<=>(const FieldElement&, const FieldElement&) = default;
};

inline bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  if (n % 2 == 0) return n == 2;
  for (std::uint64_t d = 3; d * d <= n; d += 2)
    if (n % d == 0) return false;
  return true;
}

/// Residue-class filter for prime ranges: keep p with p % modulus == residue.
struct Congruence {
  std::uint64_t modulus = 1;
  std::uint64_t residue = 0;
};

inline std::vector<std::uint64_t> primes_in_range(std::uint64_t lo, std::uint64_t hi,
                                                  std::optional<Congruence> filter = {}) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t n = lo; n <= hi; ++n) {
    if (!is_prime(n)) continue;
    if (filter && filter->modulus > 0 && n % filter->modulus != filter->residue % filter->modulus)
      continue;
    out.push_back(n);
    if (n == UINT64_MAX) break;
  }
  return out;
}

namespace detail {

// Dense polynomials over F_p, coefficients low degree first, no trailing zeros.
using Poly = std::vector<std::uint64_t>;

inline void trim(Poly& a) {
  while (!a.empty() && a.back() == 0) a.pop_back();
}

inline std::uint64_t inv_mod(std::uint64_t a, std::uint64_t p) {
  // p prime, a != 0 mod p
  std::uint64_t result = 1, base = a % p, e = p - 2;
  while (e) {
    if (e & 1) result = result * base % p;
    base = base * base % p;
    e >>= 1;
  }
  return result;
}

inline Poly poly_mod(Poly a, const Poly& m, std::uint64_t p) {
  trim(a);
  const std::size_t dm = m.size() - 1;
  const std::uint64_t lead_inv = inv_mod(m.back(), p);
  while (a.size() > dm) {
    const std::uint64_t factor = a.back() * lead_inv % p;
    const std::size_t shift = a.size() - 1 - dm;
    for (std::size_t i = 0; i <= dm; ++i)
      a[shift + i] = (a[shift + i] + p - factor * m[i] % p) % p;
    trim(a);
  }
  return a;
}

inline Poly poly_mulmod(const Poly& a, const Poly& b, const Poly& m, std::uint64_t p) {
  if (a.empty() || b.empty()) return {};
  Poly r(a.size() + b.size() - 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] = (r[i + j] + a[i] * b[j]) % p;
  return poly_mod(std::move(r), m, p);
}

inline Poly poly_powmod(Poly base, std::uint64_t e, const Poly& m, std::uint64_t p) {
  Poly result{1};
  base = poly_mod(std::move(base), m, p);
  while (e) {
    if (e & 1) result = poly_mulmod(result, base, m, p);
    base = poly_mulmod(base, base, m, p);
    e >>= 1;
  }
  return result;
}

inline Poly poly_gcd(Poly a, Poly b, std::uint64_t p) {
  trim(a);
  trim(b);
  while (!b.empty()) {
    Poly r = poly_mod(a, b, p);
    a = std::move(b);
    b = std::move(r);
  }
  return a;
}

inline std::vector<std::uint64_t> prime_factors(std::uint64_t n) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t d = 2; d * d <= n; ++d) {
    if (n % d == 0) {
      out.push_back(d);
      while (n % d == 0) n /= d;
    }
  }
  if (n > 1) out.push_back(n);
  return out;
}

// Rabin's test for a monic polynomial of degree k over F_p, preceded by a
// root check.
inline bool is_irreducible(const Poly& f, std::uint64_t p) {
  const std::size_t k = f.size() - 1;
  if (k == 1) return true;
  for (std::uint64_t x = 0; x < p; ++x) {
    std::uint64_t v = 0;
    for (std::size_t i = f.size(); i-- > 0;) v = (v * x + f[i]) % p;
    if (v == 0) return false;
  }
  auto frobenius_iterate = [&](std::uint64_t times) {
    Poly h{0, 1};
    for (std::uint64_t t = 0; t < times; ++t) h = poly_powmod(h, p, f, p);
    return h;
  };
  for (std::uint64_t r : prime_factors(k)) {
    Poly h = frobenius_iterate(k / r);
    h.resize(std::max<std::size_t>(h.size(), 2), 0);
    h[1] = (h[1] + p - 1) % p;
    trim(h);
    if (poly_gcd(h, f, p).size() != 1) return false;
  }
  Poly h = frobenius_iterate(k);
  return h == Poly{0, 1};
}

}  // namespace detail

struct FieldOptions {
  /// Largest admissible field order q.
  std::uint64_t max_order = std::uint64_t{1} << 20;
  /// Extension fields up to this order get log/antilog multiplication tables.
  std::uint64_t table_threshold = std::uint64_t{1} << 16;
};

/// Identifies a field by (p, k); carried by field-element constants.
struct FieldTag {
  std::uint32_t p = 0;
  std::uint32_t k = 0;
  friend bool operator==(const FieldTag&, const FieldTag&) = default;
};

class FieldSpec {
 public:
  static FieldSpec make(std::uint64_t p, std::uint64_t k, const FieldOptions& opts = {}) {
    if (!is_prime(p)) throw InvalidArgument("characteristic " + std::to_string(p) + " is not prime");
    if (k < 1) throw InvalidArgument("extension degree must be >= 1");
    std::uint64_t q = 1;
    for (std::uint64_t i = 0; i < k; ++i) {
      if (q > opts.max_order / p) {
        throw BudgetExceeded("field order " + std::to_string(p) + "^" + std::to_string(k) +
                             " exceeds enumeration budget " + std::to_string(opts.max_order));
      }
      q *= p;
    }
    FieldSpec f;
    f.p_ = static_cast<std::uint32_t>(p);
    f.k_ = static_cast<std::uint32_t>(k);
    f.q_ = static_cast<std::uint32_t>(q);
    f.modulus_ = least_irreducible(p, k);
    if (k > 1 && q <= opts.table_threshold) f.build_tables();
    return f;
  }

  std::uint32_t characteristic() const noexcept { return p_; }
  std::uint32_t degree() const noexcept { return k_; }
  std::uint32_t order() const noexcept { return q_; }
  FieldTag tag() const noexcept { return {p_, k_}; }

  /// Monic modulus, low coefficient first (length k + 1). For k = 1 this is x.
  const std::vector<std::uint64_t>& modulus() const noexcept { return modulus_; }

  std::string descriptor() const {
    return k_ == 1 ? std::to_string(p_) : std::to_string(p_) + "^" + std::to_string(k_);
  }

  bool contains(FieldElement a) const noexcept { return a.index < q_; }

  FieldElement zero() const noexcept { return {0}; }
  FieldElement one() const noexcept { return {1}; }

  std::vector<std::uint32_t> coefficients(FieldElement a) const {
    std::vector<std::uint32_t> c(k_);
    std::uint32_t v = a.index;
    for (std::uint32_t i = 0; i < k_; ++i) {
      c[i] = v % p_;
      v /= p_;
    }
    return c;
  }

  FieldElement from_coefficients(const std::vector<std::uint32_t>& c) const {
    std::uint32_t v = 0;
    for (std::size_t i = c.size(); i-- > 0;) v = v * p_ + c[i] % p_;
    return {v};
  }

  /// Image of an integer n = 1 + 1 + ... (negative allowed).
  FieldElement from_integer(std::int64_t n) const noexcept {
    std::int64_t r = n % static_cast<std::int64_t>(p_);
    if (r < 0) r += p_;
    return {static_cast<std::uint32_t>(r)};
  }

  /// Image of a nonnegative decimal literal of any length.
  FieldElement from_decimal(std::string_view digits) const {
    std::uint64_t r = 0;
    for (char ch : digits) {
      if (ch < '0' || ch > '9') throw InvalidArgument("bad integer literal '" + std::string(digits) + "'");
      r = (r * 10 + static_cast<std::uint64_t>(ch - '0')) % p_;
    }
    return {static_cast<std::uint32_t>(r)};
  }

  // Raw-index arithmetic, used by the evaluator's inner loops.
  std::uint32_t add_raw(std::uint32_t a, std::uint32_t b) const noexcept {
    if (k_ == 1) {
      std::uint32_t s = a + b;
      return s >= p_ ? s - p_ : s;
    }
    if (p_ == 2) return a ^ b;
    std::uint32_t out = 0, scale = 1;
    for (std::uint32_t i = 0; i < k_; ++i) {
      std::uint32_t d = a % p_ + b % p_;
      if (d >= p_) d -= p_;
      out += d * scale;
      a /= p_;
      b /= p_;
      scale *= p_;
    }
    return out;
  }

  std::uint32_t neg_raw(std::uint32_t a) const noexcept {
    if (k_ == 1) return a == 0 ? 0 : p_ - a;
    if (p_ == 2) return a;
    std::uint32_t out = 0, scale = 1;
    for (std::uint32_t i = 0; i < k_; ++i) {
      std::uint32_t d = a % p_;
      out += (d == 0 ? 0 : p_ - d) * scale;
      a /= p_;
      scale *= p_;
    }
    return out;
  }

  std::uint32_t mul_raw(std::uint32_t a, std::uint32_t b) const noexcept {
    if (k_ == 1) return static_cast<std::uint32_t>(std::uint64_t{a} * b % p_);
    if (a == 0 || b == 0) return 0;
    if (tables_) {
      std::uint32_t s = tables_->log[a] + tables_->log[b];
      if (s >= q_ - 1) s -= q_ - 1;
      return tables_->exp[s];
    }
    return poly_mul_index(a, b);
  }

  FieldElement add(FieldElement a, FieldElement b) const { return {add_raw(check(a), check(b))}; }
  FieldElement neg(FieldElement a) const { return {neg_raw(check(a))}; }
  FieldElement sub(FieldElement a, FieldElement b) const { return {add_raw(check(a), neg_raw(check(b)))}; }
  FieldElement mul(FieldElement a, FieldElement b) const { return {mul_raw(check(a), check(b))}; }

  FieldElement pow(FieldElement a, std::uint64_t e) const {
    std::uint32_t base = check(a), result = 1;
    while (e) {
      if (e & 1) result = mul_raw(result, base);
      base = mul_raw(base, base);
      e >>= 1;
    }
    return {result};
  }

  FieldElement inv(FieldElement a) const {
    if (check(a) == 0) throw InvalidArgument("inversion of zero");
    if (tables_) {
      std::uint32_t l = tables_->log[a.index];
      return {tables_->exp[l == 0 ? 0 : q_ - 1 - l]};
    }
    return pow(a, std::uint64_t{q_} - 2);
  }

  bool has_tables() const noexcept { return tables_ != nullptr; }

  std::vector<FieldElement> elements() const {
    std::vector<FieldElement> out(q_);
    for (std::uint32_t i = 0; i < q_; ++i) out[i] = {i};
    return out;
  }

  friend bool operator==(const FieldSpec& a, const FieldSpec& b) noexcept {
    return a.p_ == b.p_ && a.k_ == b.k_;
  }

 private:
  struct Tables {
    std::vector<std::uint32_t> exp;  // exp[i] = g^i, i in [0, q-1)
    std::vector<std::uint32_t> log;  // log[g^i] = i; log[0] unused
  };

  std::uint32_t check(FieldElement a) const {
    if (a.index >= q_)
      throw InvalidArgument("element " + std::to_string(a.index) + " not in F_" + descriptor());
    return a.index;
  }

  static std::vector<std::uint64_t> least_irreducible(std::uint64_t p, std::uint64_t k) {
    if (k == 1) return {0, 1};
    // Candidates x^k + (lower part), lower part enumerated by increasing index,
    // i.e. lexicographically from the highest non-leading coefficient down.
    std::uint64_t count = 1;
    for (std::uint64_t i = 0; i < k; ++i) count *= p;
    for (std::uint64_t idx = 0; idx < count; ++idx) {
      detail::Poly f(k + 1, 0);
      std::uint64_t v = idx;
      for (std::uint64_t i = 0; i < k; ++i) {
        f[i] = v % p;
        v /= p;
      }
      f[k] = 1;
      if (detail::is_irreducible(f, p)) return f;
    }
    throw Error("no irreducible polynomial found");  // unreachable for prime p
  }

  std::uint32_t poly_mul_index(std::uint32_t a, std::uint32_t b) const {
    detail::Poly pa(k_), pb(k_);
    for (std::uint32_t i = 0; i < k_; ++i) {
      pa[i] = a % p_;
      a /= p_;
      pb[i] = b % p_;
      b /= p_;
    }
    detail::trim(pa);
    detail::trim(pb);
    detail::Poly r = detail::poly_mulmod(pa, pb, modulus_, p_);
    std::uint32_t out = 0;
    for (std::size_t i = r.size(); i-- > 0;) out = out * p_ + static_cast<std::uint32_t>(r[i]);
    return out;
  }

  void build_tables() {
    const std::uint32_t n = q_ - 1;
    const auto factors = detail::prime_factors(n);
    std::uint32_t gen = 0;
    for (std::uint32_t g = 2; g < q_ && gen == 0; ++g) {
      bool primitive = true;
      for (std::uint64_t r : factors) {
        std::uint32_t x = 1, base = g;
        std::uint64_t e = n / r;
        while (e) {
          if (e & 1) x = poly_mul_index(x, base);
          base = poly_mul_index(base, base);
          e >>= 1;
        }
        if (x == 1) {
          primitive = false;
          break;
        }
      }
      if (primitive) gen = g;
    }
    auto t = std::make_shared<Tables>();
    t->exp.resize(n);
    t->log.assign(q_, 0);
    std::uint32_t x = 1;
    for (std::uint32_t i = 0; i < n; ++i) {
      t->exp[i] = x;
      t->log[x] = i;
      x = poly_mul_index(x, gen);
    }
    tables_ = std::move(t);
  }

  std::uint32_t p_ = 2, k_ = 1, q_ = 2;
  std::vector<std::uint64_t> modulus_;
  std::shared_ptr<const Tables> tables_;
};

/// Parses a field descriptor "p" or "p^k".
inline FieldSpec parse_field(std::string_view text, const FieldOptions& opts = {}) {
  auto parse_num = [&](std::string_view s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
      throw InvalidArgument("bad field descriptor '" + std::string(text) + "'");
    return v;
  };
  const auto caret = text.find('^');
  if (caret == std::string_view::npos) return FieldSpec::make(parse_num(text), 1, opts);
  return FieldSpec::make(parse_num(text.substr(0, caret)), parse_num(text.substr(caret + 1)), opts);
}

}  // namespace pfreg
