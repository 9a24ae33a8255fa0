#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "warpbridge/rng.hpp"
#include "warpbridge/sample_set.hpp"

namespace warpbridge {

/// Diagonal-covariance Gaussian mixture: K weights, K means in R^D and K
/// positive per-coordinate scales (standard deviations, the diagonal of S_k).
/// Immutable after construction; safe to share across threads.
class GaussianMixture {
public:
    GaussianMixture(std::vector<double> weights, std::vector<double> means, std::vector<double> scales,
                    std::size_t dim);

    /// Single-component mixture N(mean, diag(scale^2)).
    static GaussianMixture single(std::span<const double> mean, std::span<const double> scale);

    std::size_t components() const noexcept { return weights_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    double weight(std::size_t k) const noexcept { return weights_[k]; }
    std::span<const double> weights() const noexcept { return weights_; }
    std::span<const double> mean(std::size_t k) const noexcept { return {means_.data() + k * dim_, dim_}; }
    std::span<const double> scale(std::size_t k) const noexcept { return {scales_.data() + k * dim_, dim_}; }
    std::span<const double> means() const noexcept { return means_; }
    std::span<const double> scales() const noexcept { return scales_; }
    /// log |S_k| = sum_d log scale_{k,d}.
    double log_det_scale(std::size_t k) const noexcept { return log_det_[k]; }

    /// log pi_k + log N(x; mu_k, S_k^2) for every k, written to `out` (size K).
    void component_log_densities(std::span<const double> x, std::span<double> out) const;
    double log_pdf(std::span<const double> x) const;
    /// Posterior component probabilities given x.
    std::vector<double> responsibility(std::span<const double> x) const;

    SampleSet sample(std::size_t n, Rng& rng) const;
    /// Draw one point into `out`; returns the component index used.
    std::size_t sample_one(Rng& rng, std::span<double> out) const;

    bool operator==(const GaussianMixture&) const = default;

private:
    void check_point(std::span<const double> x, const char* where) const;

    std::size_t dim_;
    std::vector<double> weights_;
    std::vector<double> means_;
    std::vector<double> scales_;
    std::vector<double> log_weights_;
    std::vector<double> log_det_;
    std::vector<double> inv_scales_;
};

/// Index of the first cumulative weight exceeding u in (0,1).
std::size_t draw_index_from_probabilities(std::span<const double> probs, double u);

} // namespace warpbridge
