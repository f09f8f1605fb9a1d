#pragma once

// Gamma and Kummer's confluent hypergeometric function M(a;c;x), tuned for
// the gain formula's domain: a = -alpha/2 in [-0.5, 0), c = 1, x = -upsilon.

#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace arraysep {

// Lanczos approximation, g = 7, nine coefficients. Positive arguments only.
inline double gamma_fn(double x) {
  if (!(x > 0.0))
    throw std::domain_error("gamma_fn: argument must be positive");
  static constexpr double kG = 7.0;
  static constexpr double kCoeff[9] = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,     -176.61502916214059,    12.507343278686905,
      -0.13857109526572012,   9.9843695780195716e-6,  1.5056327351493116e-7};
  if (x < 0.5)
    return std::numbers::pi / (std::sin(std::numbers::pi * x) * gamma_fn(1.0 - x));
  const double z = x - 1.0;
  double acc = kCoeff[0];
  for (int i = 1; i < 9; ++i) acc += kCoeff[i] / (z + double(i));
  const double t = z + kG + 0.5;
  return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, z + 0.5) * std::exp(-t) * acc;
}

namespace detail {

// Power series sum_n (a)_n/(c)_n x^n/n! with an 80-bit accumulator.
inline double kummer_series(double a, double c, double x) {
  long double term = 1.0L;
  long double sum = 1.0L;
  for (int n = 0; n < 20000; ++n) {
    term *= (static_cast<long double>(a) + n) /
            ((static_cast<long double>(c) + n) * (n + 1.0L)) *
            static_cast<long double>(x);
    sum += term;
    if (fabsl(term) <= 1e-19L * fabsl(sum)) break;
  }
  return static_cast<double>(sum);
}

// Large negative argument: M(a;c;x) ~ G(c)/G(c-a) y^-a sum_n (a)_n(a-c+1)_n/(n! y^n)
// with y = -x; truncated at the smallest term.
inline double kummer_asymptotic_negative(double a, double c, double x) {
  const long double y = -static_cast<long double>(x);
  long double term = 1.0L;
  long double sum = 1.0L;
  long double prev = std::numeric_limits<long double>::max();
  for (int n = 1; n <= 400; ++n) {
    term *= (static_cast<long double>(a) + (n - 1)) *
            (static_cast<long double>(a - c) + n) / (static_cast<long double>(n) * y);
    if (fabsl(term) >= prev) break;
    sum += term;
    prev = fabsl(term);
    if (fabsl(term) <= 1e-19L * fabsl(sum)) break;
  }
  return gamma_fn(c) / gamma_fn(c - a) * std::pow(-x, -a) * static_cast<double>(sum);
}

}  // namespace detail

// M(a;c;x) for x in (-inf, 50]. For x in [-40, 0) the Kummer transform
// M(a;c;x) = e^x M(c-a;c;-x) keeps every series term positive on the gain
// domain; below -40 the asymptotic expansion takes over.
inline double kummer_m(double a, double c, double x) {
  if (!std::isfinite(a) || !std::isfinite(c) || !std::isfinite(x))
    throw std::domain_error("kummer_m: non-finite argument");
  if (c <= 0.0 && c == std::floor(c))
    throw std::domain_error("kummer_m: c must not be a non-positive integer");
  if (x > 50.0)
    throw std::domain_error("kummer_m: argument above supported range");
  if (x == 0.0) return 1.0;
  if (x > 0.0) return detail::kummer_series(a, c, x);
  if (x >= -40.0) return std::exp(x) * detail::kummer_series(c - a, c, -x);
  return detail::kummer_asymptotic_negative(a, c, x);
}

}  // namespace arraysep
