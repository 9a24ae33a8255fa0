#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "warpbridge/gaussian_mixture.hpp"
#include "warpbridge/target_density.hpp"

namespace warpbridge {

/// q = c * phi_mix.
struct GaussianMixtureTarget {
    GaussianMixture mixture = GaussianMixture({1.0}, {0.0}, {1.0}, 1);
    double log_c = 0.0;
};

/// q(x, y) = c * N(x; 0, s^2) * N(y - b (x^2 - s^2); 0, 1). Without the
/// normalizing factors, exp(-x^2/(2 s^2) - (y - b(x^2 - s^2))^2 / 2) has
/// integral 2 pi s.
struct BananaTarget {
    double curvature = 0.5; ///< b
    double scale = 1.0;     ///< s
    double log_c = 0.0;
};

/// q = c * sum_j w_j prod_d SN(x_d; xi_jd, omega_jd, alpha_jd), where
/// SN(x; xi, omega, alpha) = (2/omega) phi(z) Phi(alpha z), z = (x - xi)/omega.
struct SkewMixtureTarget {
    std::size_t dim = 1;
    std::vector<double> weights;
    std::vector<double> locations; ///< J x dim, row-major
    std::vector<double> scales;    ///< J x dim
    std::vector<double> shapes;    ///< J x dim
    double log_c = 0.0;
};

using BuiltinSpec = std::variant<GaussianMixtureTarget, BananaTarget, SkewMixtureTarget>;

/// Checks parameters; throws InvalidArgument naming the offending field.
void validate(const BuiltinSpec& spec);
std::size_t builtin_dim(const BuiltinSpec& spec);
double builtin_log_c(const BuiltinSpec& spec);
/// A target with its true constant, a quadrature box and a direct sampler.
TargetDensity make_target(const BuiltinSpec& spec);

/// Named fixtures used by the tests, the replication harness and the CLI.
BuiltinSpec preset(const std::string& name);
std::vector<std::string> preset_names();

/// log Phi(x), accurate far into the lower tail.
double log_std_normal_cdf(double x);

} // namespace warpbridge
