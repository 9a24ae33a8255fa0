#include "warpbridge/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "warpbridge/error.hpp"

namespace warpbridge {

double mean(std::span<const double> x) {
    require(!x.empty(), "mean: empty input");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
    require(x.size() >= 2, "sample_variance: need at least two values");
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return ss / static_cast<double>(x.size() - 1);
}

double correlation(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size() && x.size() >= 2, "correlation: need two equal-length series of length >= 2");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    require(sxx > 0.0 && syy > 0.0, "correlation: constant series");
    return sxy / std::sqrt(sxx * syy);
}

double median(std::vector<double> x) {
    require(!x.empty(), "median: empty input");
    const std::size_t mid = x.size() / 2;
    std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid), x.end());
    const double upper = x[mid];
    if (x.size() % 2 == 1) return upper;
    const double lower = *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag) {
    std::vector<double> acf(max_lag + 1, 0.0);
    acf[0] = 1.0;
    const std::size_t n = x.size();
    if (n < 2) return acf;
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double c0 = 0.0;
    for (double v : x) c0 += (v - m) * (v - m);
    if (c0 <= 0.0) return acf;
    for (std::size_t k = 1; k <= max_lag && k < n; ++k) {
        double ck = 0.0;
        for (std::size_t i = 0; i + k < n; ++i) ck += (x[i] - m) * (x[i + k] - m);
        acf[k] = ck / c0;
    }
    return acf;
}

double effective_sample_size(std::span<const double> acf, std::size_t n) {
    require(!acf.empty(), "effective_sample_size: empty autocorrelation");
    double tau = 1.0;
    for (std::size_t k = 1; k + 1 < acf.size(); k += 2) {
        const double pair = acf[k] + acf[k + 1];
        if (pair <= 0.0) break;
        tau += 2.0 * pair;
    }
    return std::min(static_cast<double>(n), static_cast<double>(n) / tau);
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
    require(!sample.empty(), "ks_statistic: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b) {
    require(!a.empty() && !b.empty(), "ks_statistic_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double kolmogorov_survival(double t) {
    if (t <= 0.0) return 1.0;
    if (t < 0.3) {
        // Small-t form: the alternating series converges too slowly here.
        const double pi2 = std::numbers::pi * std::numbers::pi;
        double cdf = 0.0;
        for (int k = 1; k <= 50; ++k) {
            const double odd = 2.0 * k - 1.0;
            cdf += std::exp(-odd * odd * pi2 / (8.0 * t * t));
        }
        return 1.0 - std::sqrt(2.0 * std::numbers::pi) / t * cdf;
    }
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * t * t);
        s += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-18) break;
    }
    return std::clamp(s, 0.0, 1.0);
}

double ks_pvalue(double d, double n_effective) {
    require(n_effective > 0.0, "ks_pvalue: effective sample size must be positive");
    const double sn = std::sqrt(n_effective);
    // Stephens' finite-sample correction of the limiting statistic.
    return kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
}

ChainKsResult ks_test_chain(std::span<const double> path, const std::function<double(double)>& cdf,
                            std::size_t max_lag) {
    require(path.size() >= 2, "ks_test_chain: need at least two points");
    std::vector<double> pit(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) pit[i] = cdf(path[i]);
    ChainKsResult r;
    r.d = ks_statistic(std::vector<double>(path.begin(), path.end()), cdf);
    r.ess = effective_sample_size(autocorrelation(pit, max_lag), path.size());
    std::vector<double> ind(pit.size());
    for (int j = 1; j <= 19; ++j) {
        const double u = 0.05 * j;
        for (std::size_t i = 0; i < pit.size(); ++i) ind[i] = pit[i] <= u ? 1.0 : 0.0;
        r.ess = std::min(r.ess, effective_sample_size(autocorrelation(ind, max_lag), path.size()));
    }
    r.p_value = ks_pvalue(r.d, r.ess);
    return r;
}

} // namespace warpbridge
