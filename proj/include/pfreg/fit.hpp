#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace pfreg {

/// y ≈ coefficient * x^exponent, fitted by least squares on (log x, log y).
struct PowerLawFit {
  double exponent = 0.0;
  double coefficient = 0.0;
  std::size_t points = 0;
};

/// Points with x <= 0 or y <= 0 are skipped. Needs two distinct x values.
inline std::optional<PowerLawFit> fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return std::nullopt;
  const double denom = static_cast<double>(n) * sxx - sx * sx;
  if (std::fabs(denom) < 1e-12) return std::nullopt;
  const double slope = (static_cast<double>(n) * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / static_cast<double>(n);
  return PowerLawFit{slope, std::exp(intercept), n};
}

}  // namespace pfreg
