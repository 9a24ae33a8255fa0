#include "warpbridge/targets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "warpbridge/error.hpp"
#include "warpbridge/numeric.hpp"

namespace warpbridge {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_finite(double v, const std::string& what) {
    require(std::isfinite(v), what + " must be finite");
}

Box mixture_box(const GaussianMixture& mix, double sigmas) {
    const std::size_t D = mix.dim();
    Box b{std::vector<double>(D, std::numeric_limits<double>::infinity()),
          std::vector<double>(D, -std::numeric_limits<double>::infinity())};
    for (std::size_t k = 0; k < mix.components(); ++k)
        for (std::size_t d = 0; d < D; ++d) {
            b.lo[d] = std::min(b.lo[d], mix.mean(k)[d] - sigmas * mix.scale(k)[d]);
            b.hi[d] = std::max(b.hi[d], mix.mean(k)[d] + sigmas * mix.scale(k)[d]);
        }
    return b;
}

TargetDensity gaussian_target(const GaussianMixtureTarget& g) {
    auto mix = g.mixture;
    const double log_c = g.log_c;
    TargetDensity t(mix.dim(), [mix, log_c](std::span<const double> x) { return log_c + mix.log_pdf(x); }, log_c,
                    "gaussian_mixture");
    t.with_box(mixture_box(mix, 10.0));
    t.with_sampler([mix](Rng& rng, std::span<double> out) { mix.sample_one(rng, out); });
    return t;
}

TargetDensity banana_target(const BananaTarget& b) {
    const double s = b.scale, k = b.curvature, log_c = b.log_c;
    const double log_norm = -kLogTwoPi - std::log(s);
    TargetDensity t(
        2,
        [=](std::span<const double> x) {
            const double z = x[0] / s;
            const double r = x[1] - k * (x[0] * x[0] - s * s);
            return log_c + log_norm - 0.5 * (z * z + r * r);
        },
        log_c, "banana");
    const double xr = 9.0 * s;
    const double ylo = std::min(-k * s * s, k * (xr * xr - s * s)) - 9.0;
    const double yhi = std::max(-k * s * s, k * (xr * xr - s * s)) + 9.0;
    t.with_box(Box{{-xr, ylo}, {xr, yhi}});
    t.with_sampler([=](Rng& rng, std::span<double> out) {
        std::normal_distribution<double> normal;
        out[0] = s * normal(rng);
        out[1] = k * (out[0] * out[0] - s * s) + normal(rng);
    });
    return t;
}

TargetDensity skew_target(const SkewMixtureTarget& m) {
    const std::size_t D = m.dim, J = m.weights.size();
    std::vector<double> log_w(J);
    for (std::size_t j = 0; j < J; ++j) log_w[j] = std::log(m.weights[j]);
    auto log_q = [m, log_w, D, J](std::span<const double> x) {
        std::vector<double> terms(J);
        for (std::size_t j = 0; j < J; ++j) {
            double acc = log_w[j];
            for (std::size_t d = 0; d < D; ++d) {
                const double om = m.scales[j * D + d];
                const double z = (x[d] - m.locations[j * D + d]) / om;
                acc += std::numbers::ln2 - std::log(om) - 0.5 * (kLogTwoPi + z * z) +
                       log_std_normal_cdf(m.shapes[j * D + d] * z);
            }
            terms[j] = acc;
        }
        return m.log_c + log_sum_exp(terms);
    };
    TargetDensity t(D, log_q, m.log_c, "skew_mixture");

    Box box{std::vector<double>(D, std::numeric_limits<double>::infinity()),
            std::vector<double>(D, -std::numeric_limits<double>::infinity())};
    for (std::size_t j = 0; j < J; ++j)
        for (std::size_t d = 0; d < D; ++d) {
            box.lo[d] = std::min(box.lo[d], m.locations[j * D + d] - 10.0 * m.scales[j * D + d]);
            box.hi[d] = std::max(box.hi[d], m.locations[j * D + d] + 10.0 * m.scales[j * D + d]);
        }
    t.with_box(std::move(box));

    t.with_sampler([m, D](Rng& rng, std::span<double> out) {
        const std::size_t j = draw_index_from_probabilities(m.weights, uniform01(rng));
        std::normal_distribution<double> normal;
        for (std::size_t d = 0; d < D; ++d) {
            const double a = m.shapes[j * D + d];
            const double delta = a / std::sqrt(1.0 + a * a);
            const double z0 = std::abs(normal(rng)), z1 = normal(rng);
            out[d] = m.locations[j * D + d] + m.scales[j * D + d] * (delta * z0 + std::sqrt(1.0 - delta * delta) * z1);
        }
    });
    return t;
}

SkewMixtureTarget skew_1d(std::vector<double> w, std::vector<double> loc, std::vector<double> sc,
                          std::vector<double> sh, double log_c) {
    return SkewMixtureTarget{1, std::move(w), std::move(loc), std::move(sc), std::move(sh), log_c};
}

} // namespace

double log_std_normal_cdf(double x) {
    if (x > -30.0) return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
    // Asymptotic expansion of the Mills ratio.
    const double x2 = x * x;
    return -0.5 * x2 - std::log(-x) - 0.5 * kLogTwoPi + std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

void validate(const BuiltinSpec& spec) {
    std::visit(overloaded{
                   [](const GaussianMixtureTarget& g) { check_finite(g.log_c, "gaussian_mixture.log_c"); },
                   [](const BananaTarget& b) {
                       check_finite(b.log_c, "banana.log_c");
                       check_finite(b.curvature, "banana.curvature");
                       require(std::isfinite(b.scale) && b.scale > 0.0, "banana.scale must be positive");
                   },
                   [](const SkewMixtureTarget& m) {
                       check_finite(m.log_c, "skew_mixture.log_c");
                       require(m.dim >= 1, "skew_mixture.dim must be at least 1");
                       const std::size_t J = m.weights.size();
                       require(J >= 1, "skew_mixture.weights must be nonempty");
                       require(m.locations.size() == J * m.dim, "skew_mixture.locations must be J x dim");
                       require(m.scales.size() == J * m.dim, "skew_mixture.scales must be J x dim");
                       require(m.shapes.size() == J * m.dim, "skew_mixture.shapes must be J x dim");
                       double total = 0.0;
                       for (double w : m.weights) {
                           require(std::isfinite(w) && w > 0.0, "skew_mixture.weights must be positive");
                           total += w;
                       }
                       require(std::abs(total - 1.0) <= 1e-12, "skew_mixture.weights must sum to 1");
                       for (double s : m.scales)
                           require(std::isfinite(s) && s > 0.0, "skew_mixture.scales must be positive");
                       for (double v : m.locations) check_finite(v, "skew_mixture.locations");
                       for (double v : m.shapes) check_finite(v, "skew_mixture.shapes");
                   },
               },
               spec);
}

std::size_t builtin_dim(const BuiltinSpec& spec) {
    return std::visit(overloaded{
                          [](const GaussianMixtureTarget& g) { return g.mixture.dim(); },
                          [](const BananaTarget&) { return std::size_t{2}; },
                          [](const SkewMixtureTarget& m) { return m.dim; },
                      },
                      spec);
}

double builtin_log_c(const BuiltinSpec& spec) {
    return std::visit([](const auto& s) { return s.log_c; }, spec);
}

TargetDensity make_target(const BuiltinSpec& spec) {
    validate(spec);
    return std::visit(overloaded{
                          [](const GaussianMixtureTarget& g) { return gaussian_target(g); },
                          [](const BananaTarget& b) { return banana_target(b); },
                          [](const SkewMixtureTarget& m) { return skew_target(m); },
                      },
                      spec);
}

std::vector<std::string> preset_names() {
    return {"trimodal_gaussian_1d", "trimodal_skewed_1d", "trimodal_skewed_1d_b", "skewed_unimodal_1d",
            "standard_normal_1d",   "trimodal_skewed_2d", "banana_2d",            "gaussian_mixture_10d"};
}

BuiltinSpec preset(const std::string& name) {
    if (name == "trimodal_gaussian_1d")
        return GaussianMixtureTarget{GaussianMixture({0.3, 0.4, 0.3}, {-4.0, 0.0, 5.0}, {0.8, 1.2, 0.6}, 1), 2.0};
    if (name == "trimodal_skewed_1d")
        return skew_1d({0.35, 0.4, 0.25}, {-6.0, 0.0, 6.0}, {1.5, 1.0, 2.0}, {3.0, -2.0, 5.0}, 2.0);
    if (name == "trimodal_skewed_1d_b")
        return skew_1d({0.3, 0.3, 0.4}, {-5.0, 1.0, 7.0}, {1.0, 2.0, 1.2}, {-4.0, 2.0, 1.5}, -1.0);
    if (name == "skewed_unimodal_1d") return skew_1d({1.0}, {5.0}, {3.0}, {4.0}, 0.0);
    if (name == "standard_normal_1d")
        return GaussianMixtureTarget{GaussianMixture({1.0}, {0.0}, {1.0}, 1), 0.0};
    if (name == "trimodal_skewed_2d")
        return SkewMixtureTarget{2,
                                 {0.3, 0.4, 0.3},
                                 {-5.0, -3.0, 0.0, 4.0, 5.0, -2.0},
                                 {1.0, 1.5, 1.2, 0.8, 1.5, 1.0},
                                 {3.0, -2.0, -3.0, 4.0, 2.0, 5.0},
                                 1.0};
    if (name == "banana_2d") return BananaTarget{0.5, 1.5, 0.5};
    if (name == "gaussian_mixture_10d") {
        const std::size_t D = 10, K = 4;
        std::vector<double> means(K * D), scales(K * D);
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t d = 0; d < D; ++d) {
                means[k * D + d] = 3.0 * std::cos(1.7 * static_cast<double>(k + 1) * static_cast<double>(d + 1));
                scales[k * D + d] = 0.6 + 0.1 * static_cast<double>((k + d) % 4);
            }
        return GaussianMixtureTarget{GaussianMixture({0.1, 0.2, 0.3, 0.4}, means, scales, D), 1.5};
    }
    fail(ErrorCode::InvalidArgument, "unknown target preset '" + name + "'");
}

} // namespace warpbridge
