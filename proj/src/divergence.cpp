#include "warpbridge/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "warpbridge/error.hpp"
#include "warpbridge/numeric.hpp"

namespace warpbridge {

Density density_from_mixture(const GaussianMixture& mix, double box_sigmas) {
    Density d;
    d.dim = mix.dim();
    d.log_pdf = [mix](std::span<const double> x) { return mix.log_pdf(x); };
    d.box.lo.assign(mix.dim(), std::numeric_limits<double>::infinity());
    d.box.hi.assign(mix.dim(), -std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < mix.components(); ++k) {
        const double smax = *std::max_element(mix.scale(k).begin(), mix.scale(k).end());
        for (std::size_t j = 0; j < mix.dim(); ++j) {
            d.box.lo[j] = std::min(d.box.lo[j], mix.mean(k)[j] - box_sigmas * smax);
            d.box.hi[j] = std::max(d.box.hi[j], mix.mean(k)[j] + box_sigmas * smax);
        }
    }
    d.sampler = [mix](Rng& rng, std::span<double> out) { mix.sample_one(rng, out); };
    return d;
}

Density standard_normal_density(std::size_t dim, double box_sigmas) {
    std::vector<double> zero(dim, 0.0), one(dim, 1.0);
    return density_from_mixture(GaussianMixture::single(zero, one), box_sigmas);
}

Density density_from_target(const TargetDensity& target, std::optional<double> log_c) {
    if (!log_c) log_c = target.true_log_c();
    require(log_c.has_value(), "density_from_target: normalizing constant unknown for '" + target.label() + "'");
    require(target.box().has_value(), "density_from_target: target '" + target.label() + "' has no quadrature box");
    Density d;
    d.dim = target.dim();
    const double c = *log_c;
    d.log_pdf = [target, c](std::span<const double> x) { return target.log_q(x) - c; };
    d.box = *target.box();
    d.sampler = target.sampler();
    return d;
}

std::pair<double, double> harmonic_weights(double s1) {
    require(s1 > 0.0 && s1 < 1.0, "harmonic divergence: s1 must lie in (0, 1)");
    const double s2 = 1.0 - s1;
    const double inv = 1.0 / s1 + 1.0 / s2;
    return {(1.0 / s1) / inv, (1.0 / s2) / inv};
}

namespace {

struct Integrands {
    double hellinger_sq = 0.0; // 1/2 (sqrt p1 - sqrt p2)^2
    double harmonic = 0.0;     // [w1/p1 + w2/p2]^-1
    double l1 = 0.0;           // |p1 - p2|
};

Integrands integrands(double l1, double l2, double log_w1, double log_w2) {
    Integrands out;
    const double p1 = std::exp(l1), p2 = std::exp(l2);
    const double diff = std::sqrt(p1) - std::sqrt(p2);
    out.hellinger_sq = 0.5 * diff * diff;
    out.l1 = std::abs(p1 - p2);
    if (l1 != kNegInf && l2 != kNegInf)
        out.harmonic = std::exp(l1 + l2 - log_add_exp(log_w1 + l2, log_w2 + l1));
    return out;
}

std::vector<double> trapezoid_nodes(double lo, double hi, std::size_t n, double& h) {
    require(n >= 2, "quadrature: need at least two nodes per dimension");
    require(hi > lo, "quadrature: empty box");
    h = (hi - lo) / static_cast<double>(n - 1);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = lo + h * static_cast<double>(i);
    return x;
}

/// Visits every grid node with its trapezoid weight (cell volume included).
template <class Visit>
void for_each_node(const Box& box, std::size_t nodes, Visit&& visit) {
    const std::size_t dim = box.dim();
    if (dim == 1) {
        double h = 0.0;
        auto xs = trapezoid_nodes(box.lo[0], box.hi[0], nodes, h);
        for (std::size_t i = 0; i < nodes; ++i) {
            const double w = (i == 0 || i + 1 == nodes) ? 0.5 * h : h;
            visit(std::span<const double>(&xs[i], 1), w);
        }
    } else if (dim == 2) {
        double hx = 0.0, hy = 0.0;
        auto xs = trapezoid_nodes(box.lo[0], box.hi[0], nodes, hx);
        auto ys = trapezoid_nodes(box.lo[1], box.hi[1], nodes, hy);
        double pt[2];
        for (std::size_t i = 0; i < nodes; ++i) {
            const double wx = (i == 0 || i + 1 == nodes) ? 0.5 * hx : hx;
            pt[0] = xs[i];
            for (std::size_t j = 0; j < nodes; ++j) {
                const double wy = (j == 0 || j + 1 == nodes) ? 0.5 * hy : hy;
                pt[1] = ys[j];
                visit(std::span<const double>(pt, 2), wx * wy);
            }
        }
    } else {
        fail(ErrorCode::InvalidArgument,
             "quadrature supports dimension 1 or 2 only; use the Monte Carlo method for dimension " +
                 std::to_string(dim));
    }
}

/// The L1 integrand |p1 - p2| has a kink wherever the densities cross, which
/// degrades the trapezoid rule to O(h^2). For a 1-D grid with node values d_i
/// of p1 - p2 this returns the amount to add to the plain trapezoid sum: each
/// crossing cell is integrated on a cubic interpolant split at its root, and
/// the Euler-Maclaurin end terms of the two smooth pieces are removed.
double l1_kink_correction(const std::vector<double>& d, double h) {
    double corr = 0.0;
    for (std::size_t i = 1; i + 2 < d.size(); ++i) {
        const double a = d[i], b = d[i + 1];
        if (!((a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0))) continue;
        const double y0 = d[i - 1], y3 = d[i + 2];
        // Lagrange cubic through local coordinates u = -1, 0, 1, 2.
        auto cubic = [&](double u) {
            return -y0 * u * (u - 1.0) * (u - 2.0) / 6.0 + a * (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0 -
                   b * (u + 1.0) * u * (u - 2.0) / 2.0 + y3 * (u + 1.0) * u * (u - 1.0) / 6.0;
        };
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            if ((cubic(mid) < 0.0) == (a < 0.0)) lo = mid;
            else hi = mid;
        }
        const double root = 0.5 * (lo + hi);
        // Simpson is exact for the cubic on each side of the root.
        auto simpson = [&](double u0, double u1) {
            return (u1 - u0) / 6.0 *
                   (std::abs(cubic(u0)) + 4.0 * std::abs(cubic(0.5 * (u0 + u1))) + std::abs(cubic(u1)));
        };
        corr += h * (simpson(0.0, root) + simpson(root, 1.0)) - 0.5 * h * (std::abs(a) + std::abs(b));
        const double da = (b - y0) / (2.0 * h), db = (y3 - a) / (2.0 * h);
        const double sa = a > 0.0 ? 1.0 : -1.0, sb = b > 0.0 ? 1.0 : -1.0;
        corr -= h * h / 12.0 * (sa * da - sb * db);
    }
    return corr;
}

} // namespace

double quadrature_integral(std::size_t dim, const std::function<double(std::span<const double>)>& log_f,
                           const Box& box, std::size_t nodes) {
    require_dim(box.dim(), dim, "quadrature_integral");
    double total = 0.0;
    for_each_node(box, nodes, [&](std::span<const double> x, double w) {
        const double lf = log_f(x);
        if (lf != kNegInf) total += w * std::exp(lf);
    });
    return total;
}

std::function<double(double)> quadrature_cdf(const Density& p, std::size_t nodes) {
    require_dim(p.dim, 1, "quadrature_cdf");
    double h = 0.0;
    auto xs = trapezoid_nodes(p.box.lo[0], p.box.hi[0], nodes, h);
    std::vector<double> cdf(nodes, 0.0);
    double prev = std::exp(p.log_pdf(std::span<const double>(&xs[0], 1)));
    for (std::size_t i = 1; i < nodes; ++i) {
        const double cur = std::exp(p.log_pdf(std::span<const double>(&xs[i], 1)));
        cdf[i] = cdf[i - 1] + 0.5 * h * (prev + cur);
        prev = cur;
    }
    const double total = cdf.back();
    require(total > 0.0, "quadrature_cdf: density has no mass on its box");
    for (double& v : cdf) v /= total;
    const double lo = xs.front(), hi = xs.back();
    return [cdf = std::move(cdf), lo, hi, h](double x) {
        if (x <= lo) return 0.0;
        if (x >= hi) return 1.0;
        const double u = (x - lo) / h;
        const std::size_t i = std::min(static_cast<std::size_t>(u), cdf.size() - 2);
        const double f = u - static_cast<double>(i);
        return cdf[i] + f * (cdf[i + 1] - cdf[i]);
    };
}

DivergenceTable divergence_table(const Density& p1, const Density& p2, double s1, const QuadratureOptions& opts) {
    require_dim(p2.dim, p1.dim, "divergence");
    if (p1.dim > 2)
        fail(ErrorCode::InvalidArgument, "quadrature divergence supports dimension <= 2; use the monte_carlo method");
    const Box box = opts.box ? *opts.box : p1.box.hull(p2.box);
    const auto [w1, w2] = harmonic_weights(s1);
    const double lw1 = std::log(w1), lw2 = std::log(w2);
    Integrands sum;
    std::vector<double> diffs;
    if (p1.dim == 1) diffs.reserve(opts.nodes);
    for_each_node(box, opts.nodes, [&](std::span<const double> x, double w) {
        const double l1 = p1.log_pdf(x), l2 = p2.log_pdf(x);
        const auto g = integrands(l1, l2, lw1, lw2);
        sum.hellinger_sq += w * g.hellinger_sq;
        sum.harmonic += w * g.harmonic;
        sum.l1 += w * g.l1;
        if (p1.dim == 1) diffs.push_back(std::exp(l1) - std::exp(l2));
    });
    if (p1.dim == 1)
        sum.l1 += l1_kink_correction(diffs, (box.hi[0] - box.lo[0]) / static_cast<double>(opts.nodes - 1));
    // Normalized inputs keep these in range; the clamps absorb quadrature
    // error when a density has jumps at the edge of its support.
    DivergenceTable t;
    t.hellinger = std::min(1.0, std::sqrt(std::max(0.0, sum.hellinger_sq)));
    t.harmonic = std::clamp(1.0 - sum.harmonic, 0.0, 1.0);
    t.l1 = std::clamp(sum.l1, 0.0, 2.0);
    t.overlap = 1.0 - t.l1 / 2.0;
    return t;
}

DivergenceValue divergence(const Density& p1, const Density& p2, DivergenceSpec spec, const QuadratureOptions& opts) {
    const auto t = divergence_table(p1, p2, spec.s1, opts);
    switch (spec.kind) {
    case DivergenceKind::Hellinger: return {t.hellinger, 0.0};
    case DivergenceKind::Harmonic: return {t.harmonic, 0.0};
    case DivergenceKind::L1: return {t.l1, 0.0};
    case DivergenceKind::Overlap: return {t.overlap, 0.0};
    }
    fail(ErrorCode::Internal, "unknown divergence kind");
}

DivergenceValue divergence(const Density& p1, const Density& p2, DivergenceSpec spec, const MonteCarloOptions& opts) {
    require_dim(p2.dim, p1.dim, "divergence");
    require(p1.sampler && p2.sampler, "monte carlo divergence needs samplers for both densities");
    require(opts.n >= 4, "monte carlo divergence needs n >= 4");
    const auto [w1, w2] = harmonic_weights(spec.s1);
    const double lw1 = std::log(w1), lw2 = std::log(w2);
    const std::size_t half = opts.n / 2;

    // Stratified draws from the equal mixture m = (p1 + p2) / 2; each integrand g
    // is estimated by the mean of g / m over both strata.
    double mean[2] = {0.0, 0.0}, m2[2] = {0.0, 0.0};
    std::vector<double> x(p1.dim);
    for (int stratum = 0; stratum < 2; ++stratum) {
        Rng rng = make_rng(derive_seed(opts.seed, stream::divergence_mc, static_cast<std::uint64_t>(stratum)));
        const Density& src = stratum == 0 ? p1 : p2;
        for (std::size_t i = 0; i < half; ++i) {
            src.sampler(rng, x);
            const double l1 = p1.log_pdf(x), l2 = p2.log_pdf(x);
            const double lm = log_add_exp(l1, l2) - std::log(2.0);
            const auto g = integrands(l1, l2, lw1, lw2);
            double gi = 0.0;
            switch (spec.kind) {
            case DivergenceKind::Hellinger: gi = g.hellinger_sq; break;
            case DivergenceKind::Harmonic: gi = g.harmonic; break;
            case DivergenceKind::L1:
            case DivergenceKind::Overlap: gi = g.l1; break;
            }
            const double y = gi / std::exp(lm);
            const double delta = y - mean[stratum];
            mean[stratum] += delta / static_cast<double>(i + 1);
            m2[stratum] += delta * (y - mean[stratum]);
        }
    }
    const double nh = static_cast<double>(half);
    const double integral = 0.5 * (mean[0] + mean[1]);
    const double se = 0.5 * std::sqrt(m2[0] / (nh - 1) / nh + m2[1] / (nh - 1) / nh);
    switch (spec.kind) {
    case DivergenceKind::Hellinger: {
        const double h = std::sqrt(std::max(0.0, integral));
        return {h, h > 0 ? se / (2.0 * h) : std::sqrt(se)};
    }
    case DivergenceKind::Harmonic: return {1.0 - integral, se};
    case DivergenceKind::L1: return {integral, se};
    case DivergenceKind::Overlap: return {1.0 - integral / 2.0, se / 2.0};
    }
    fail(ErrorCode::Internal, "unknown divergence kind");
}

} // namespace warpbridge
