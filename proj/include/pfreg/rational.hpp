#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>

#include "pfreg/error.hpp"

namespace pfreg {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  constexpr Rational() = default;
  constexpr Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d) {
    if (den == 0) throw InvalidArgument("zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const { return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den); }

  friend constexpr bool operator==(const Rational&, const Rational&) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num) * b.den <=> static_cast<__int128>(b.num) * a.den;
  }
};

/// Best rational approximation of v > 0 with denominator at most max_den,
/// from the continued-fraction convergents and the final semiconvergent.
/// Equidistant candidates resolve to the smaller denominator.
inline Rational snap_rational(double v, std::int64_t max_den) {
  if (!(v > 0) || !std::isfinite(v)) throw InvalidArgument("snap_rational needs a positive finite value");
  if (max_den < 1) throw InvalidArgument("snap_rational needs max_den >= 1");
  std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double x = v;
  for (int iter = 0; iter < 64; ++iter) {
    const double af = std::floor(x);
    if (af > 9e15) break;
    const auto a = static_cast<std::int64_t>(af);
    const std::int64_t q2 = q0 + a * q1;
    if (q2 > max_den) break;
    const std::int64_t p2 = p0 + a * p1;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const double frac = x - af;
    if (frac < 1e-12 || std::fabs(static_cast<double>(p1) / static_cast<double>(q1) - v) < 1e-15) break;
    x = 1.0 / frac;
  }
  const std::int64_t k = (max_den - q0) / q1;
  const Rational semi(p0 + k * p1, q0 + k * q1);
  const Rational conv(p1, q1);
  const double e_semi = std::fabs(semi.value() - v), e_conv = std::fabs(conv.value() - v);
  if (e_semi < e_conv) return semi;
  if (e_conv < e_semi) return conv;
  return semi.den < conv.den ? semi : conv;
}

/// Smallest-denominator positive rational in [lo, hi] with denominator at
/// most max_den; among equal denominators, the one nearest `center`.
inline std::optional<Rational> simplest_in(double lo, double hi, std::int64_t max_den, double center) {
  if (hi < lo) return std::nullopt;
  for (std::int64_t d = 1; d <= max_den; ++d) {
    const auto nlo = static_cast<std::int64_t>(std::ceil(lo * static_cast<double>(d) - 1e-12));
    const auto nhi = static_cast<std::int64_t>(std::floor(hi * static_cast<double>(d) + 1e-12));
    std::optional<std::int64_t> best;
    for (std::int64_t n = std::max<std::int64_t>(nlo, 1); n <= nhi; ++n) {
      if (!best || std::fabs(static_cast<double>(n) / d - center) < std::fabs(static_cast<double>(*best) / d - center))
        best = n;
    }
    if (best) return Rational(*best, d);
  }
  return std::nullopt;
}

}  // namespace pfreg
