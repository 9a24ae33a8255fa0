#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "warpbridge/bridge.hpp"
#include "warpbridge/em.hpp"
#include "warpbridge/gaussian_mixture.hpp"
#include "warpbridge/sample_set.hpp"
#include "warpbridge/target_density.hpp"
#include "warpbridge/warp.hpp"

namespace warpbridge {

/// Tuning for the half-split estimators. Unset L and m take the defaults
/// L = min(50K, n/2) and m = n.
struct PipelineConfig {
    std::size_t components = 1;
    std::optional<std::size_t> components2; ///< second dataset's K for the direct ratio; defaults to K
    std::optional<std::size_t> fit_size;    ///< L
    std::optional<std::size_t> reference_size; ///< m (total over both orientations)
    std::size_t subsets = 5;                ///< S
    EMConfig em;                            ///< K and seed here are overridden
    BridgeOptions bridge;
    std::uint64_t seed = 0;

    std::size_t resolved_fit_size(std::size_t n) const;
    std::size_t resolved_reference_size(std::size_t n) const;
    /// Throws on violated invariants (L > n/2, m < 2S, n < 2K); returns warnings (K > n/100).
    std::vector<std::string> validate(std::size_t n) const;
};

struct Timings {
    double em = 0.0;     ///< seconds fitting mixtures
    double bridge = 0.0; ///< seconds transforming, evaluating and bridging
    double total = 0.0;
};

struct EstimateReport {
    double lambda_hat = 0.0;   ///< mean of the two half estimates
    double variance_hat = 0.0; ///< subset-based estimate of Var(lambda_hat)
    std::array<double, 2> half_estimates{};
    std::array<std::vector<double>, 2> subset_estimates; ///< S sub-estimates per half
    std::vector<GaussianMixture> mixtures;
    Timings timings;
    double pps = 0.0; ///< 1 / (variance_hat * timings.total)
    bool converged = true;
    std::vector<std::string> warnings;
};

/// Warp-U bridge estimate of log c with the half-split protocol: for each
/// orientation, fit on L points of one half, Warp-U the other half, bridge
/// against m/2 fresh N(0, I) draws; average the two orientations.
EstimateReport estimate_lambda_warpu(const TargetDensity& target, const SampleSet& draws, const PipelineConfig& cfg);

/// Same protocol, bridging q on the raw half against m/2 draws from the fitted mixture.
EstimateReport estimate_lambda_mix(const TargetDensity& target, const SampleSet& draws, const PipelineConfig& cfg);

/// Single bridge (no half split) between all `draws` pushed through a fixed
/// warp and m fresh N(0, I) draws. The variance is the plug-in estimate.
/// With the identity shift this is vanilla bridge sampling against N(0, I).
EstimateReport estimate_lambda_fixed_warp(const TargetDensity& target, const SampleSet& draws, const WarpSpec& spec,
                                          std::size_t m, std::uint64_t seed, const BridgeOptions& opts = {});

/// Moment-matched warp of the given level: 0 identity shift, 1 Warp-I
/// (sample mean), 2 Warp-II (mean and standard deviation), 3 Warp-III (same
/// mean and standard deviation, plus the random sign).
WarpSpec moment_warp(int level, const SampleSet& draws);

enum class RatioProcedure { UDiff, MixDiff, UDirect };

/// log(c1 / c2) by one of three procedures: difference of two Warp-U
/// estimates, difference of two mixture estimates, or one bridge directly
/// between the two Warp-U transformed datasets.
EstimateReport estimate_ratio(const TargetDensity& target1, const SampleSet& draws1, const TargetDensity& target2,
                              const SampleSet& draws2, const PipelineConfig& cfg, RatioProcedure procedure);

struct EstimatorStats {
    double bias = 0.0;
    double sd = 0.0; ///< population (1/N) standard deviation, so rmse^2 = bias^2 + sd^2
    double rmse = 0.0;
};
EstimatorStats summarize(std::span<const double> estimates, double truth);

struct BiasDemoReport {
    double true_lambda = 0.0;
    EstimatorStats leaky; ///< mixture fitted on the same draws it transforms
    EstimatorStats split; ///< half-split estimator
    std::vector<double> leaky_estimates;
    std::vector<double> split_estimates;
};

/// Replicates the leaky and the half-split Warp-U estimators on fresh target
/// draws to expose the bias from reusing the fitting data. Needs reps >= 2
/// and a target with a known constant and a direct sampler.
BiasDemoReport adaptive_bias_demo(const TargetDensity& target, std::size_t n, std::size_t components, std::size_t reps,
                                  std::uint64_t seed, std::size_t threads = 1);

/// Warp-U estimate where the mixture is fitted on all of `draws` and the same
/// draws are transformed; m = n reference draws.
double estimate_lambda_leaky(const TargetDensity& target, const SampleSet& draws, const PipelineConfig& cfg);

// Building blocks, exposed for tests and for callers composing their own protocol.

/// Seed of one orientation: a function of the base seed and the fitting half's contents.
std::uint64_t orientation_seed(std::uint64_t base, const SampleSet& fit_half);
/// `count` i.i.d. N(0, I_dim) draws.
SampleSet reference_draws(std::size_t dim, std::size_t count, std::uint64_t seed);
/// Bridge input for q~ (at `warped` and `reference`) against N(0, I).
BridgeInput warped_bridge_input(const TargetDensity& warped_target, const SampleSet& warped,
                                const SampleSet& reference);
/// Sub-estimates over S near-equal blocks of a seeded permutation of each sample.
std::vector<double> subset_estimates(const BridgeInput& input, std::size_t subsets, std::uint64_t seed,
                                     const BridgeOptions& opts);

} // namespace warpbridge
