#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "warpbridge/gaussian_mixture.hpp"
#include "warpbridge/sample_set.hpp"

namespace warpbridge {

/// Multi-start penalized EM settings. Restarts 0..M/2-1 draw initial means
/// at random from the data; restarts M/2..M-1 stratify along the coordinate
/// of largest variance.
struct EMConfig {
    std::size_t components = 1;
    std::size_t restarts = 10;
    std::size_t max_iters = 500;
    double rel_tol = 1e-6;
    std::uint64_t seed = 0;
    std::size_t threads = 1; ///< restarts run in parallel; the result does not depend on this

    void validate() const;
};

struct EMResult {
    GaussianMixture mixture;
    double loglik = 0.0;           ///< un-penalized, at the returned parameters
    double penalized_loglik = 0.0; ///< loglik + penalty
    std::size_t iterations = 0;
    std::size_t restart_index = 0;
    bool converged = false;
    std::size_t rescued_components = 0;
    /// Penalized log-likelihood at the initial point and after every M-step.
    std::vector<double> penalized_trace;
};

/// Type-7 (linear interpolation) quantile of already sorted values.
double quantile_sorted(std::span<const double> sorted, double prob);

/// Per-coordinate 75th minus 25th percentile. Needs n >= 4; throws naming the
/// coordinate when a column is constant.
std::vector<double> inter_quantile_range(const SampleSet& data);

/// Penalty -(1/sqrt n) sum_{k,d} (IQ_d^2 / sigma_{k,d}^2 + log sigma_{k,d}^2).
double em_penalty(const GaussianMixture& mix, std::span<const double> iqr, std::size_t n);

GaussianMixture em_initialize(const SampleSet& data, const EMConfig& cfg, std::size_t restart);
GaussianMixture em_initialize(const SampleSet& data, std::span<const double> iqr, const EMConfig& cfg,
                              std::size_t restart);

/// Penalized EM from `init`; the IQR that scales the penalty is computed from `data`.
EMResult em_fit(const SampleSet& data, const EMConfig& cfg, const GaussianMixture& init);
/// Same, with the penalty's IQR supplied by the caller.
EMResult em_fit(const SampleSet& data, std::span<const double> iqr, const EMConfig& cfg,
                const GaussianMixture& init);

/// Runs every restart and keeps the one with the largest un-penalized
/// log-likelihood (ties go to the lowest restart index).
EMResult multi_start_fit(const SampleSet& data, const EMConfig& cfg);

} // namespace warpbridge
