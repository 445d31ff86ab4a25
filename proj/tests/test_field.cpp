#include <gtest/gtest.h>

#include <random>

#include "pfreg/field.hpp"

using namespace pfreg;

namespace {

// Coefficient-vector product mod (modulus, p), schoolbook; independent of FieldSpec::mul.
std::vector<std::uint32_t> poly_mul_mod(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b,
                                        const std::vector<std::uint64_t>& m, std::uint32_t p) {
  const std::size_t k = m.size() - 1;
  std::vector<std::uint64_t> prod(2 * k, 0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) prod[i + j] = (prod[i + j] + std::uint64_t{a[i]} * b[j]) % p;
  for (std::size_t d = 2 * k - 1; d-- > k;) {
    const std::uint64_t c = prod[d];
    if (!c) continue;
    for (std::size_t i = 0; i <= k; ++i) prod[d - k + i] = (prod[d - k + i] + p * p - c * m[i] % p) % p;
  }
  return {prod.begin(), prod.begin() + static_cast<std::ptrdiff_t>(k)};
}

const std::vector<std::pair<int, int>> kSmallFields = {{2, 1}, {3, 1}, {5, 1}, {7, 1}, {13, 1}, {31, 1}, {61, 1},
                                                       {2, 2}, {2, 3}, {3, 2}, {2, 4}, {5, 2}, {3, 3}, {7, 2}, {2, 6}};

}  // namespace

TEST(Field, MakePrimeField) {
  const auto f = FieldSpec::make(7, 1);
  EXPECT_EQ(f.order(), 7u);
  EXPECT_EQ(f.characteristic(), 7u);
  EXPECT_EQ(f.degree(), 1u);
  EXPECT_EQ(f.descriptor(), "7");
}

TEST(Field, NonPrimeCharacteristicRejected) {
  EXPECT_THROW(FieldSpec::make(4, 1), InvalidArgument);
  EXPECT_THROW(FieldSpec::make(1, 1), InvalidArgument);
  EXPECT_THROW(FieldSpec::make(7, 0), InvalidArgument);
}

TEST(Field, OrderAboveBudgetRejected) {
  FieldOptions opts;
  opts.max_order = 1000;
  EXPECT_THROW(FieldSpec::make(1009, 1, opts), BudgetExceeded);
  EXPECT_THROW(FieldSpec::make(2, 10, opts), BudgetExceeded);
  EXPECT_NO_THROW(FieldSpec::make(997, 1, opts));
}

TEST(Field, F8ModulusIsLeastIrreducibleCubic) {
  // Oracle: monic cubics x^3 + c2 x^2 + c1 x + c0 over F_2 in lexicographic order
  // of (c0, c1, c2) by index; a cubic is irreducible iff it has no root.
  std::vector<std::uint64_t> expected;
  for (std::uint32_t idx = 0; idx < 8 && expected.empty(); ++idx) {
    const std::uint64_t c0 = idx & 1, c1 = (idx >> 1) & 1, c2 = (idx >> 2) & 1;
    bool root = false;
    for (std::uint64_t x = 0; x < 2; ++x) root |= (x * x * x + c2 * x * x + c1 * x + c0) % 2 == 0;
    if (!root) expected = {c0, c1, c2, 1};
  }
  const auto f = FieldSpec::make(2, 3);
  EXPECT_EQ(f.modulus(), expected);
  EXPECT_EQ(f.modulus(), (std::vector<std::uint64_t>{1, 1, 0, 1}));  // x^3 + x + 1
  EXPECT_EQ(f.descriptor(), "2^3");
}

TEST(Field, ModulusIsIrreducibleByBruteForce) {
  // A polynomial of degree k <= 3 over F_p is irreducible iff it has no root;
  // for degree 4 additionally check no monic quadratic factor.
  for (auto [p, k] : std::vector<std::pair<int, int>>{{2, 2}, {2, 3}, {3, 2}, {3, 3}, {5, 2}, {5, 3}, {7, 3}, {2, 4}, {3, 4}}) {
    const auto f = FieldSpec::make(p, k);
    const auto& m = f.modulus();
    ASSERT_EQ(m.size(), static_cast<std::size_t>(k + 1));
    EXPECT_EQ(m.back(), 1u);
    for (std::uint64_t x = 0; x < static_cast<std::uint64_t>(p); ++x) {
      std::uint64_t v = 0;
      for (std::size_t i = m.size(); i-- > 0;) v = (v * x + m[i]) % p;
      EXPECT_NE(v, 0u) << "root " << x << " of modulus for " << p << "^" << k;
    }
    if (k == 4) {
      for (std::uint64_t b = 0; b < static_cast<std::uint64_t>(p); ++b)
        for (std::uint64_t a = 0; a < static_cast<std::uint64_t>(p); ++a) {
          // divide m by x^2 + a x + b and check the remainder is nonzero
          std::vector<std::int64_t> r(m.begin(), m.end());
          for (int d = 4; d >= 2; --d) {
            const std::int64_t c = r[d] % p;
            r[d] = 0;
            r[d - 1] = ((r[d - 1] - c * static_cast<std::int64_t>(a)) % p + p) % p;
            r[d - 2] = ((r[d - 2] - c * static_cast<std::int64_t>(b)) % p + p) % p;
          }
          EXPECT_FALSE(r[0] % p == 0 && r[1] % p == 0) << "quadratic factor of modulus for " << p << "^4";
        }
    }
  }
}

TEST(Field, MulAndInverseExamples) {
  const auto f = FieldSpec::make(7, 1);
  EXPECT_EQ(f.mul({3}, {5}), FieldElement{15 % 7});
  // inverse oracle: exhaust multiples of 3 mod 7
  std::uint32_t inv3 = 0;
  for (std::uint32_t b = 1; b < 7; ++b)
    if (3 * b % 7 == 1) inv3 = b;
  EXPECT_EQ(f.inv({3}), FieldElement{inv3});
  EXPECT_EQ(f.inv({3}), FieldElement{5});
  EXPECT_THROW(f.inv({0}), InvalidArgument);
  EXPECT_THROW(f.add({7}, {1}), InvalidArgument);
}

TEST(Field, EnumerationStartsWithZeroOne) {
  for (auto [p, k] : kSmallFields) {
    const auto f = FieldSpec::make(p, k);
    const auto els = f.elements();
    ASSERT_EQ(els.size(), f.order());
    EXPECT_EQ(els[0], f.zero());
    EXPECT_EQ(els[1], f.one());
    for (std::uint32_t i = 0; i < f.order(); ++i) EXPECT_EQ(els[i].index, i);
  }
}

TEST(Field, AxiomsExhaustiveSmallFields) {
  for (auto [p, k] : kSmallFields) {
    const auto f = FieldSpec::make(p, k);
    const std::uint32_t q = f.order();
    ASSERT_LE(q, 64u);
    for (std::uint32_t a = 0; a < q; ++a) {
      const FieldElement A{a};
      EXPECT_EQ(f.add(A, f.neg(A)), f.zero());
      EXPECT_EQ(f.mul(A, f.one()), A);
      if (a) {
        EXPECT_EQ(f.mul(A, f.inv(A)), f.one());
        EXPECT_EQ(f.pow(A, q - 1), f.one());
      }
      for (std::uint32_t b = 0; b < q; ++b) {
        const FieldElement B{b};
        EXPECT_EQ(f.add(A, B), f.add(B, A));
        EXPECT_EQ(f.mul(A, B), f.mul(B, A));
        EXPECT_EQ(f.sub(f.add(A, B), B), A);
        // against independent polynomial arithmetic
        EXPECT_EQ(f.coefficients(f.mul(A, B)), poly_mul_mod(f.coefficients(A), f.coefficients(B), f.modulus(), p));
        for (std::uint32_t c = 0; c < q; c += (q > 16 ? 7 : 1)) {
          const FieldElement C{c};
          EXPECT_EQ(f.add(f.add(A, B), C), f.add(A, f.add(B, C)));
          EXPECT_EQ(f.mul(f.mul(A, B), C), f.mul(A, f.mul(B, C)));
          EXPECT_EQ(f.mul(A, f.add(B, C)), f.add(f.mul(A, B), f.mul(A, C)));
        }
      }
    }
  }
}

TEST(Field, AxiomsSampledLargerFields) {
  std::mt19937_64 rng(12345);
  for (auto [p, k] : std::vector<std::pair<int, int>>{{101, 1}, {1009, 1}, {3, 5}, {2, 10}, {11, 3}, {2, 17}}) {
    const auto f = FieldSpec::make(p, k);
    std::uniform_int_distribution<std::uint32_t> d(0, f.order() - 1);
    for (int t = 0; t < 2000; ++t) {
      const FieldElement a{d(rng)}, b{d(rng)}, c{d(rng)};
      EXPECT_EQ(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
      EXPECT_EQ(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
      EXPECT_EQ(f.coefficients(f.mul(a, b)), poly_mul_mod(f.coefficients(a), f.coefficients(b), f.modulus(), p));
      if (a.index) EXPECT_EQ(f.mul(a, f.inv(a)), f.one());
    }
  }
}

TEST(Field, TablesOnlyBelowThreshold) {
  EXPECT_TRUE(FieldSpec::make(2, 8).has_tables());
  FieldOptions opts;
  opts.table_threshold = 16;
  EXPECT_FALSE(FieldSpec::make(2, 8, opts).has_tables());
  const auto with = FieldSpec::make(3, 4), without = FieldSpec::make(3, 4, FieldOptions{1 << 20, 8});
  for (std::uint32_t a = 0; a < 81; ++a)
    for (std::uint32_t b = 0; b < 81; ++b) EXPECT_EQ(with.mul({a}, {b}), without.mul({a}, {b}));
}

TEST(Field, PrimesInRange) {
  EXPECT_EQ(primes_in_range(10, 20), (std::vector<std::uint64_t>{11, 13, 17, 19}));
  EXPECT_EQ(primes_in_range(10, 30, Congruence{4, 1}), (std::vector<std::uint64_t>{13, 17, 29}));
  EXPECT_TRUE(primes_in_range(24, 28).empty());
  EXPECT_TRUE(primes_in_range(20, 10).empty());
}

TEST(Field, ParseDescriptor) {
  EXPECT_EQ(parse_field("13").order(), 13u);
  EXPECT_EQ(parse_field("2^3").order(), 8u);
  EXPECT_EQ(parse_field("3^2").descriptor(), "3^2");
  EXPECT_THROW(parse_field("x"), InvalidArgument);
  EXPECT_THROW(parse_field("2^"), InvalidArgument);
  EXPECT_THROW(parse_field("6"), InvalidArgument);
}

TEST(Field, IntegerImages) {
  const auto f = FieldSpec::make(2, 3);
  EXPECT_EQ(f.from_integer(3), f.one());
  EXPECT_EQ(f.from_integer(-1), f.one());
  const auto g = FieldSpec::make(7, 1);
  EXPECT_EQ(g.from_decimal("100000000000000000000000000000"), FieldElement{static_cast<std::uint32_t>(
                                                                       [] {
                                                                         std::uint64_t r = 0;
                                                                         for (char c : std::string("100000000000000000000000000000")) r = (r * 10 + (c - '0')) % 7;
                                                                         return r;
                                                                       }())});
  EXPECT_EQ(g.from_integer(-3), FieldElement{4});
}
