#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

namespace warpbridge {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLogTwoPi = 1.8378770664093454836; // log(2*pi)

inline double log_add_exp(double a, double b) noexcept {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(-std::abs(a - b)));
}

/// Max-shifted log(sum(exp(x))). Empty input or all -inf gives -inf.
inline double log_sum_exp(std::span<const double> x) noexcept {
    double hi = kNegInf;
    for (double v : x) hi = std::max(hi, v);
    if (hi == kNegInf) return kNegInf;
    if (hi == std::numeric_limits<double>::infinity()) return hi;
    double acc = 0.0;
    for (double v : x) acc += std::exp(v - hi);
    return hi + std::log(acc);
}

/// log of the arithmetic mean of exp(x).
inline double log_mean_exp(std::span<const double> x) noexcept {
    return log_sum_exp(x) - std::log(static_cast<double>(x.size()));
}

/// Standard normal log density, summed over coordinates.
inline double std_normal_logpdf(std::span<const double> x) noexcept {
    double ss = 0.0;
    for (double v : x) ss += v * v;
    return -0.5 * (static_cast<double>(x.size()) * kLogTwoPi + ss);
}

/// exp(x) for x <= 0, within a few ulp of std::exp. Results below the
/// smallest normal double are flushed to zero, and -inf gives 0. Inline and
/// branch-free so loops over it vectorize.
inline double exp_nonpositive(double x) noexcept {
    constexpr double kLog2e = 1.4426950408889634074;
    constexpr double kLn2Hi = 6.93147180369123816490e-01; // low 32 bits zero
    constexpr double kLn2Lo = 1.90821492927058770002e-10;
    constexpr double kRound = 6755399441055744.0; // 1.5 * 2^52
    constexpr double kMin = -708.3964185322641;    // log(DBL_MIN)
    const double xc = x < kMin ? kMin : x;
    // After adding kRound the low mantissa bits hold round(xc / ln 2).
    const double shifted = xc * kLog2e + kRound;
    const double n = shifted - kRound;
    const double r = (xc - n * kLn2Hi) - n * kLn2Lo;
    double p = 1.0 / 6227020800.0; // 1/13!
    p = p * r + 1.0 / 479001600.0;
    p = p * r + 1.0 / 39916800.0;
    p = p * r + 1.0 / 3628800.0;
    p = p * r + 1.0 / 362880.0;
    p = p * r + 1.0 / 40320.0;
    p = p * r + 1.0 / 5040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    const std::uint64_t bits = (std::bit_cast<std::uint64_t>(shifted) + 1023u) << 52;
    const double y = p * std::bit_cast<double>(bits);
    return x < kMin ? 0.0 : y;
}

inline double std_normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

} // namespace warpbridge
