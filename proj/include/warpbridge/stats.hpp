#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace warpbridge {

double mean(std::span<const double> x);
/// Unbiased (n - 1) sample variance.
double sample_variance(std::span<const double> x);
double correlation(std::span<const double> x, std::span<const double> y);
double median(std::vector<double> x);

/// Sample autocorrelation at lags 0..max_lag (lag 0 is 1). Lags at or beyond
/// the series length are reported as 0. A constant series gives 1 at lag 0
/// and 0 elsewhere.
std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag);

/// n / (1 + 2 sum rho_k), truncating the sum at the first non-positive
/// pair of consecutive autocorrelations (Geyer's initial positive sequence).
double effective_sample_size(std::span<const double> acf, std::size_t n);

/// sup_x |F_n(x) - F(x)| for a sample against a continuous CDF.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);
/// Two-sample sup |F_a - F_b|.
double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b);
/// P(K > t) for the Kolmogorov limit distribution.
double kolmogorov_survival(double t);
/// Asymptotic p-value of a one-sample KS statistic with `n_effective` draws.
double ks_pvalue(double d, double n_effective);

struct ChainKsResult {
    double d = 0.0;
    double ess = 0.0; ///< smallest effective size over the series tested
    double p_value = 0.0;
};
/// KS test of a serially dependent path against `cdf`. The statistic is a
/// supremum over the indicator series 1{F(x_t) <= u}, so the effective sample
/// size is the smallest one among F(x_t) itself and the indicators at
/// u = 0.05, 0.10, ..., 0.95.
ChainKsResult ks_test_chain(std::span<const double> path, const std::function<double(double)>& cdf,
                            std::size_t max_lag = 1000);

} // namespace warpbridge
