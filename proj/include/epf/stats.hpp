#pragma once

#include <cmath>

namespace epf {

inline constexpr double kPi = 3.14159265358979323846;

inline double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double norm_upper_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

inline double mean_of(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return n ? s / static_cast<double>(n) : 0.0;
}

inline double variance_of(const double* x, std::size_t n, double mean) {
  if (n < 2) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = x[i] - mean;
    s += d * d;
  }
  return s / static_cast<double>(n - 1);
}

}  // namespace epf
