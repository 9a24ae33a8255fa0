#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "warpbridge/gaussian_mixture.hpp"
#include "warpbridge/rng.hpp"
#include "warpbridge/sample_set.hpp"
#include "warpbridge/target_density.hpp"

namespace warpbridge {

/// Current point of a Warp-U chain. Component indices are 0-based.
struct ChainState {
    std::vector<double> w;
    std::size_t t = 0;
    std::size_t last_psi = 0;
    std::size_t last_psi_star = 0;
};

struct ChainDiagnostics {
    /// acf[d] for each coordinate d, then one more row for the coordinate sums.
    /// Computed on the stored (thinned) path; acf[.][0] == 1.
    std::vector<std::vector<double>> acf;
    std::size_t unique_points = 0; ///< distinct states visited over all steps
    std::vector<double> trace;     ///< coordinate sum of each stored state
    std::size_t steps = 0;
    std::size_t thin = 1; ///< effective thinning of the stored path (may grow past the storage cap)
};

struct ChainOptions {
    std::size_t steps = 1000;
    std::size_t thin = 1;
    std::size_t max_lag = 50;
    std::size_t max_stored = 1'000'000;
};

struct ChainResult {
    SampleSet samples; ///< stored states, in time order
    ChainDiagnostics diagnostics;
    ChainState final_state;
};

/// P(psi* = k | w~), proportional to pi_k q(H_k w~) / phi_mix(H_k w~).
/// Throws "chain escaped support" if q vanishes at every H_k w~.
std::vector<double> psi_star_weights(const GaussianMixture& mix, const TargetDensity& target,
                                     std::span<const double> w_tilde);

/// One transition w -> H_{psi*}(F_psi(w)). When psi* == psi the point is
/// returned unchanged (no round-off from the forward/inverse pair).
ChainState chain_step(const ChainState& state, const GaussianMixture& mix, const TargetDensity& target, Rng& rng);

ChainResult run_chain(std::span<const double> w0, const ChainOptions& opts, const GaussianMixture& mix,
                      const TargetDensity& target, std::uint64_t seed);

/// Independent chains, one per row of `starts`, each run for `steps`
/// transitions; returns the final states. Chain i uses derive_seed(seed, chain, i),
/// so the result does not depend on `threads`.
SampleSet run_parallel_chains(const SampleSet& starts, std::size_t steps, const GaussianMixture& mix,
                              const TargetDensity& target, std::uint64_t seed, std::size_t threads = 1);

} // namespace warpbridge
