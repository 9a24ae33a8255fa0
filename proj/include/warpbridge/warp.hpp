#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "warpbridge/gaussian_mixture.hpp"
#include "warpbridge/rng.hpp"
#include "warpbridge/sample_set.hpp"
#include "warpbridge/target_density.hpp"

namespace warpbridge {

/// Warp-I: w -> w - mu.
struct ShiftWarp {
    std::vector<double> mu;
};
/// Warp-II: w -> S^{-1}(w - mu).
struct ScaleWarp {
    std::vector<double> mu;
    std::vector<double> scale;
};
/// Warp-III: w -> xi S^{-1}(w - mu) with a fair random sign xi.
struct SymmetrizeWarp {
    std::vector<double> mu;
    std::vector<double> scale;
};
/// Warp-U: w -> S_psi^{-1}(w - mu_psi) with psi drawn from the mixture's
/// responsibilities at w. The reference density is N(0, I).
struct MixtureWarp {
    GaussianMixture mixture;
};

using WarpSpec = std::variant<ShiftWarp, ScaleWarp, SymmetrizeWarp, MixtureWarp>;

void validate(const WarpSpec& spec);
std::size_t warp_dim(const WarpSpec& spec);
bool warp_is_stochastic(const WarpSpec& spec);

struct WarpedSample {
    std::vector<double> point;
    std::optional<std::size_t> psi; ///< component index (0-based), Warp-U only
    int sign = 1;                   ///< xi for Warp-III, +1 otherwise
    std::vector<double> source;
};

/// Transform one point. `rng` may be null only for deterministic kinds.
WarpedSample warp_forward(const WarpSpec& spec, std::span<const double> w, Rng* rng);
/// Same, driven by an explicit uniform variate in (0,1) for the random part.
WarpedSample warp_forward_with_uniform(const WarpSpec& spec, std::span<const double> w, double u);

struct WarpedSet {
    SampleSet points;
    /// Warp-U: psi per row (0-based); Warp-III: sign per row; otherwise empty.
    std::vector<int> labels;
};

/// Batch transform. Row i uses a uniform derived from (seed, i) alone, so the
/// output does not depend on `threads`.
WarpedSet warp_samples(const WarpSpec& spec, const SampleSet& samples, std::uint64_t seed, std::size_t threads = 1);

/// H_psi(w~) = S_psi w~ + mu_psi.
std::vector<double> warp_inverse(const GaussianMixture& mix, std::span<const double> w_tilde, std::size_t psi);

/// log q~ at one point for the given warp of q.
double warped_log_density(const WarpSpec& spec, const TargetDensity& target, std::span<const double> w_tilde);
/// log q~ at every row of `points`, issuing one batched call to the target.
std::vector<double> warped_log_density(const WarpSpec& spec, const TargetDensity& target, const SampleSet& points);

/// Box that contains the warped density's mass given the original's box.
Box warped_box(const WarpSpec& spec, const Box& box);

/// The warped unnormalized density as a target in its own right: same
/// constant, warped box, and a sampler (draw from the target, then warp).
TargetDensity warped_target(const WarpSpec& spec, const TargetDensity& target);

} // namespace warpbridge
