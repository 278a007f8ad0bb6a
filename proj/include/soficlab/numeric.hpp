#ifndef SOFICLAB_NUMERIC_HPP
#define SOFICLAB_NUMERIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "soficlab/errors.hpp"

namespace soficlab {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) without overflow.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// log(sum_i exp(args[i])). Summation follows the order of `args`, so callers
// that need bit-reproducible totals must pass a deterministic order.
inline double log_sum_exp(std::span<const double> args) {
  if (args.empty()) return kNegInf;
  const double hi = *std::max_element(args.begin(), args.end());
  if (hi == kNegInf) return kNegInf;
  if (std::isinf(hi)) return hi;
  double sum = 0.0;
  for (double a : args) sum += std::exp(a - hi);
  return hi + std::log(sum);
}

inline double log_factorial(std::int64_t n) {
  return std::lgamma(static_cast<double>(n) + 1.0);
}

// log of n! / prod_c k_c!, where n = sum k. Returns -inf if any k_c < 0.
inline double log_multinomial(std::span<const std::int64_t> counts) {
  std::int64_t n = 0;
  double denominator = 0.0;
  for (auto k : counts) {
    if (k < 0) return kNegInf;
    n += k;
    denominator += log_factorial(k);
  }
  return log_factorial(n) - denominator;
}

inline double log_binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return kNegInf;
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

// Exact multinomial coefficient when it fits in 53 bits (so that it is also
// exactly representable as a double); nullopt otherwise.
inline std::optional<std::uint64_t> exact_multinomial(std::span<const std::int64_t> counts) {
  constexpr unsigned __int128 limit = static_cast<unsigned __int128>(1) << 53;
  unsigned __int128 value = 1;
  std::int64_t placed = 0;
  for (auto k : counts) {
    if (k < 0) return 0;
    // Multiply by C(placed + k, k) incrementally; every partial product is an
    // integer binomial coefficient times the previous value.
    for (std::int64_t j = 1; j <= k; ++j) {
      value = value * static_cast<unsigned __int128>(placed + j);
      value /= static_cast<unsigned __int128>(j);
      if (value >= limit) return std::nullopt;
    }
    placed += k;
  }
  return static_cast<std::uint64_t>(value);
}

// Shannon entropy in nats of a finite distribution (0 log 0 = 0).
inline double entropy_nats(std::span<const double> p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

// H(t, 1 - t) in nats.
inline double binary_entropy_nats(double t) {
  const double p[2] = {t, 1.0 - t};
  return entropy_nats(p);
}

inline constexpr double kZ99 = 2.5758293035489004;  // two-sided 99% normal quantile

struct BinomialInterval {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 1.0;
  double half_width = 0.5;
};

// Wilson score interval for `successes` out of `trials`.
inline BinomialInterval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                                        double z = kZ99) {
  require(trials > 0, "wilson_interval: trials must be positive");
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (phat + z2 / (2.0 * n)) / denom;
  const double spread = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  BinomialInterval out;
  out.estimate = phat;
  out.lower = std::max(0.0, centre - spread);
  out.upper = std::min(1.0, centre + spread);
  out.half_width = 0.5 * (out.upper - out.lower);
  return out;
}

// Number of count vectors of length `parts` summing to n, as a double.
inline double composition_count(std::int64_t n, std::int64_t parts) {
  if (parts <= 0) return n == 0 ? 1.0 : 0.0;
  return std::round(std::exp(log_binomial(n + parts - 1, parts - 1)));
}

}  // namespace soficlab

#endif  // SOFICLAB_NUMERIC_HPP
