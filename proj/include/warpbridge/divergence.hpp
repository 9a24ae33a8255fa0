#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include "warpbridge/gaussian_mixture.hpp"
#include "warpbridge/target_density.hpp"

namespace warpbridge {

/// A normalized density for divergence work: log pdf, the box quadrature
/// should cover, and (optionally) a sampler for the Monte Carlo route.
/// Normalization is the caller's responsibility and is not checked.
struct Density {
    std::size_t dim = 0;
    std::function<double(std::span<const double>)> log_pdf;
    Box box;
    TargetDensity::Sampler sampler;
};

/// Box is the hull of [mu - box_sigmas*sigma_max, mu + box_sigmas*sigma_max] over components.
Density density_from_mixture(const GaussianMixture& mix, double box_sigmas = 10.0);
Density standard_normal_density(std::size_t dim, double box_sigmas = 10.0);
/// p = q / exp(log_c); log_c defaults to the target's true constant. Needs a box.
Density density_from_target(const TargetDensity& target, std::optional<double> log_c = std::nullopt);

enum class DivergenceKind { Hellinger, Harmonic, L1, Overlap };

struct DivergenceSpec {
    DivergenceKind kind = DivergenceKind::Hellinger;
    /// Sample fraction of p1 for the harmonic divergence; s2 = 1 - s1.
    double s1 = 0.5;
};

struct QuadratureOptions {
    std::size_t nodes = 2048; ///< trapezoid nodes per dimension
    std::optional<Box> box;   ///< overrides the hull of the two densities' boxes
};

struct MonteCarloOptions {
    std::size_t n = 100000;
    std::uint64_t seed = 0;
};

struct DivergenceValue {
    double value = 0.0;
    double std_error = 0.0; ///< zero for quadrature
};

/// All four divergences from one pass over the grid.
struct DivergenceTable {
    double hellinger = 0.0;
    double harmonic = 0.0;
    double l1 = 0.0;
    double overlap = 0.0;
};

DivergenceTable divergence_table(const Density& p1, const Density& p2, double s1 = 0.5,
                                 const QuadratureOptions& opts = {});
DivergenceValue divergence(const Density& p1, const Density& p2, DivergenceSpec spec,
                           const QuadratureOptions& opts = {});
DivergenceValue divergence(const Density& p1, const Density& p2, DivergenceSpec spec,
                           const MonteCarloOptions& opts);

/// Trapezoid integral of exp(log_f) over `box` (dim 1 or 2).
double quadrature_integral(std::size_t dim, const std::function<double(std::span<const double>)>& log_f,
                           const Box& box, std::size_t nodes = 2048);

/// CDF of a 1-D density tabulated by the trapezoid rule on its box and
/// renormalized to end at 1; linear between nodes, 0 and 1 outside the box.
std::function<double(double)> quadrature_cdf(const Density& p, std::size_t nodes = 20001);

/// Weights (w1, w2) of the harmonic divergence from the sample fractions s1, s2.
std::pair<double, double> harmonic_weights(double s1);

} // namespace warpbridge
