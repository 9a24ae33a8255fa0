#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "warpbridge/divergence.hpp"

namespace warpbridge {

/// Both unnormalized log densities evaluated at the draws from p1 and at the
/// draws from p2. Entries are finite or -inf, never NaN.
struct BridgeInput {
    std::vector<double> log_q1_at_1;
    std::vector<double> log_q2_at_1;
    std::vector<double> log_q1_at_2;
    std::vector<double> log_q2_at_2;

    std::size_t n1() const noexcept { return log_q1_at_1.size(); }
    std::size_t n2() const noexcept { return log_q1_at_2.size(); }
    void validate() const;
    /// Exchange the roles of the two densities and sample sets.
    BridgeInput swapped() const;
    /// Rows `idx1` of sample 1 and `idx2` of sample 2.
    BridgeInput subset(std::span<const std::size_t> idx1, std::span<const std::size_t> idx2) const;
};

struct BridgeOptions {
    double tol = 1e-10; ///< stop when |r(t+1)/r(t) - 1| < tol
    std::size_t max_iters = 500;
    double r0 = 1.0;
};

struct BridgeResult {
    double lambda_hat = 0.0; ///< log r_hat
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> trace; ///< log r at the start and after each iteration
    std::optional<double> variance_hat;
    /// Draws where both densities are zero; they add nothing to either sum.
    std::size_t zero_density_draws = 0;
};

/// Bridge estimate of log(c1/c2) for a caller-supplied bridge function alpha
/// (given on the log scale at both draw sets).
double bridge_general(const BridgeInput& input, std::span<const double> log_alpha_at_1,
                      std::span<const double> log_alpha_at_2);

/// Optimal bridge by fixed-point iteration on r. Non-convergence is reported
/// through `converged`, not thrown.
BridgeResult bridge_optimal(const BridgeInput& input, const BridgeOptions& opts = {});

/// Variance estimate from S sub-estimates for each of two halves:
/// 1/(4S(S-1)) sum_i sum_s (lambda_{i,s} - mean_i)^2.
double subset_variance(std::span<const double> half1, std::span<const double> half2);

enum class BridgeAlpha { Optimal, Geometric, Importance };

/// First-order variance (n1+n2)^-1 V_alpha(p1, p2) by quadrature over normalized densities.
double asymptotic_variance(const Density& p1, const Density& p2, std::size_t n1, std::size_t n2, BridgeAlpha alpha,
                           const QuadratureOptions& opts = {});
/// Optimal-bridge variance through the harmonic divergence:
/// (1/n1 + 1/n2) [(1 - H_A)^-1 - 1].
double optimal_variance_harmonic(const Density& p1, const Density& p2, std::size_t n1, std::size_t n2,
                                 const QuadratureOptions& opts = {});
/// Geometric-bridge variance through the Hellinger distance:
/// (1/n1 + 1/n2) {b [1 - H_E^2]^-2 - 1}, b the common-support mass of p1* + p2*.
double geometric_variance_hellinger(const Density& p1, const Density& p2, std::size_t n1, std::size_t n2,
                                    const QuadratureOptions& opts = {});
/// Plug-in variance of the optimal bridge at its fixed point from the draws themselves.
double plug_in_variance(const BridgeInput& input, double lambda_hat);

} // namespace warpbridge
