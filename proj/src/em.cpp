#include "warpbridge/em.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include "warpbridge/error.hpp"
#include "warpbridge/numeric.hpp"
#include "warpbridge/parallel.hpp"
#include "warpbridge/rng.hpp"

namespace warpbridge {

void EMConfig::validate() const {
    require(components >= 1, "EMConfig: K must be at least 1");
    require(restarts >= 2 && restarts % 2 == 0, "EMConfig: restart count M must be even and at least 2");
    require(max_iters >= 1, "EMConfig: max_iters must be at least 1");
    require(rel_tol > 0.0, "EMConfig: rel_tol must be positive");
}

double quantile_sorted(std::span<const double> sorted, double prob) {
    require(!sorted.empty(), "quantile of empty data");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<double> inter_quantile_range(const SampleSet& data) {
    require(data.size() >= 4, "inter_quantile_range: need at least 4 points");
    std::vector<double> iqr(data.dim());
    for (std::size_t d = 0; d < data.dim(); ++d) {
        auto col = data.column(d);
        std::sort(col.begin(), col.end());
        iqr[d] = quantile_sorted(col, 0.75) - quantile_sorted(col, 0.25);
        if (!(iqr[d] > 0.0))
            fail(ErrorCode::InvalidArgument,
                 "inter_quantile_range: zero inter-quartile range in dimension " + std::to_string(d));
    }
    return iqr;
}

double em_penalty(const GaussianMixture& mix, std::span<const double> iqr, std::size_t n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < mix.components(); ++k)
        for (std::size_t d = 0; d < mix.dim(); ++d) {
            const double var = mix.scale(k)[d] * mix.scale(k)[d];
            acc += iqr[d] * iqr[d] / var + std::log(var);
        }
    return -acc / std::sqrt(static_cast<double>(n));
}

GaussianMixture em_initialize(const SampleSet& data, const EMConfig& cfg, std::size_t restart) {
    return em_initialize(data, inter_quantile_range(data), cfg, restart);
}

GaussianMixture em_initialize(const SampleSet& data, std::span<const double> iqr, const EMConfig& cfg,
                              std::size_t restart) {
    cfg.validate();
    const std::size_t n = data.size(), D = data.dim(), K = cfg.components;
    require(n >= K, "em_initialize: fewer data points (" + std::to_string(n) + ") than components (" +
                        std::to_string(K) + ")");
    require_dim(iqr.size(), D, "em_initialize");
    Rng rng = make_rng(derive_seed(cfg.seed, stream::em_restart, restart));

    std::vector<std::size_t> chosen(K);
    if (restart < cfg.restarts / 2) {
        // K distinct points, partial Fisher-Yates.
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t k = 0; k < K; ++k) {
            std::uniform_int_distribution<std::size_t> pick(k, n - 1);
            std::swap(idx[k], idx[pick(rng)]);
            chosen[k] = idx[k];
        }
    } else {
        std::size_t dstar = 0;
        double best_var = -1.0;
        for (std::size_t d = 0; d < D; ++d) {
            double mean = 0.0, m2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double delta = data(i, d) - mean;
                mean += delta / static_cast<double>(i + 1);
                m2 += delta * (data(i, d) - mean);
            }
            if (m2 > best_var) {
                best_var = m2;
                dstar = d;
            }
        }
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return data(a, dstar) < data(b, dstar); });
        // Central 95% by rank, cut into K groups of near-equal count.
        std::size_t lo = static_cast<std::size_t>(std::llround(0.025 * static_cast<double>(n)));
        std::size_t hi = n - lo;
        if (hi - lo < K) {
            lo = 0;
            hi = n;
        }
        const std::size_t count = hi - lo;
        for (std::size_t k = 0; k < K; ++k) {
            const std::size_t a = lo + k * count / K;
            const std::size_t b = lo + (k + 1) * count / K;
            std::uniform_int_distribution<std::size_t> pick(a, b - 1);
            chosen[k] = order[pick(rng)];
        }
    }

    std::vector<double> weights(K, 1.0 / static_cast<double>(K));
    std::vector<double> means(K * D), scales(K * D);
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t d = 0; d < D; ++d) {
            means[k * D + d] = data(chosen[k], d);
            scales[k * D + d] = std::sqrt(1.5) * iqr[d];
        }
    // 1/K repeated K times can miss 1 by an ulp or two; that is within the mixture's tolerance.
    return GaussianMixture(std::move(weights), std::move(means), std::move(scales), D);
}

namespace {

/// E-step: fills gamma (n x K, row-major) and per-point log mixture density;
/// returns the log-likelihood.
[[gnu::target_clones("avx2", "default")]] double e_step(const GaussianMixture& mix, const SampleSet& data, std::vector<double>& gamma,
              std::vector<double>& log_dens) {
    const std::size_t n = data.size(), K = mix.components(), D = mix.dim();
    // Same arithmetic as GaussianMixture::component_log_densities, with the
    // parameters laid out d-major so the loops over components vectorize.
    const auto means = mix.means(), scales = mix.scales();
    const double base = -0.5 * static_cast<double>(D) * kLogTwoPi;
    std::vector<double> mu_t(D * K), inv_t(D * K), pre(K);
    for (std::size_t k = 0; k < K; ++k) {
        pre[k] = std::log(mix.weight(k)) + base - mix.log_det_scale(k);
        for (std::size_t d = 0; d < D; ++d) {
            mu_t[d * K + k] = means[k * D + d];
            inv_t[d * K + k] = 1.0 / scales[k * D + d];
        }
    }
    // Points are processed in tiles stored component-major, so the max, exp and
    // sum over components run as independent lanes across the tile's points.
    constexpr std::size_t kTile = 64;
    std::vector<double> tile(K * kTile), hi(kTile), total(kTile);
    const double* x = data.values().data();
    double ll = 0.0;
    for (std::size_t i0 = 0; i0 < n; i0 += kTile) {
        const std::size_t B = std::min(kTile, n - i0);
        const double* xb = x + i0 * D;
        for (std::size_t k = 0; k < K; ++k) {
            double* t = tile.data() + k * kTile;
            std::fill(t, t + B, 0.0);
            for (std::size_t d = 0; d < D; ++d) {
                const double mu = mu_t[d * K + k], inv = inv_t[d * K + k];
                for (std::size_t b = 0; b < B; ++b) {
                    const double z = (xb[b * D + d] - mu) * inv;
                    t[b] += z * z;
                }
            }
            for (std::size_t b = 0; b < B; ++b) t[b] = pre[k] - 0.5 * t[b];
        }
        std::copy(tile.begin(), tile.begin() + static_cast<std::ptrdiff_t>(B), hi.begin());
        for (std::size_t k = 1; k < K; ++k) {
            const double* t = tile.data() + k * kTile;
            for (std::size_t b = 0; b < B; ++b) hi[b] = t[b] > hi[b] ? t[b] : hi[b];
        }
        std::fill(total.begin(), total.end(), 0.0);
        for (std::size_t k = 0; k < K; ++k) {
            double* t = tile.data() + k * kTile;
            for (std::size_t b = 0; b < B; ++b) {
                t[b] = exp_nonpositive(t[b] - hi[b]);
                total[b] += t[b];
            }
        }
        for (std::size_t b = 0; b < B; ++b) {
            double* g = gamma.data() + (i0 + b) * K;
            if (!std::isfinite(hi[b])) {
                std::fill(g, g + K, 0.0);
                log_dens[i0 + b] = hi[b];
                ll += hi[b];
                continue;
            }
            const double inv = 1.0 / total[b];
            for (std::size_t k = 0; k < K; ++k) g[k] = tile[k * kTile + b] * inv;
            const double lse = hi[b] + std::log(total[b]);
            log_dens[i0 + b] = lse;
            ll += lse;
        }
    }
    return ll;
}

[[gnu::target_clones("avx2", "default")]] GaussianMixture m_step(const SampleSet& data, std::span<const double> iqr, const std::vector<double>& gamma,
                       const std::vector<double>& log_dens, std::size_t K, std::size_t& rescues) {
    const std::size_t n = data.size(), D = data.dim();
    const double root_n = std::sqrt(static_cast<double>(n));
    const double* x = data.values().data();
    // Accumulators are stored d-major (index d * K + k) so the inner loop over
    // components is contiguous.
    std::vector<double> nk(K, 0.0), mean_t(D * K, 0.0), ss_t(D * K, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* g = gamma.data() + i * K;
        for (std::size_t k = 0; k < K; ++k) nk[k] += g[k];
        for (std::size_t d = 0; d < D; ++d) {
            const double xd = x[i * D + d];
            double* m = mean_t.data() + d * K;
            for (std::size_t k = 0; k < K; ++k) m[k] += g[k] * xd;
        }
    }
    std::vector<double> weights(K);
    std::vector<double> means(K * D), scales(K * D);
    std::vector<char> empty(K, 0);
    for (std::size_t k = 0; k < K; ++k) {
        if (nk[k] < 1e-10) {
            empty[k] = 1;
            continue;
        }
        for (std::size_t d = 0; d < D; ++d) mean_t[d * K + k] /= nk[k];
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double* g = gamma.data() + i * K;
        for (std::size_t d = 0; d < D; ++d) {
            const double xd = x[i * D + d];
            const double* m = mean_t.data() + d * K;
            double* sk = ss_t.data() + d * K;
            for (std::size_t k = 0; k < K; ++k) {
                const double r = xd - m[k];
                sk[k] += g[k] * r * r;
            }
        }
    }
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t d = 0; d < D; ++d) means[k * D + d] = mean_t[d * K + k];
    const double total = std::accumulate(nk.begin(), nk.end(), 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        if (empty[k]) {
            // Re-seed at the worst-explained point with the initial spread.
            const auto worst = static_cast<std::size_t>(
                std::min_element(log_dens.begin(), log_dens.end()) - log_dens.begin());
            for (std::size_t d = 0; d < D; ++d) {
                means[k * D + d] = data(worst, d);
                scales[k * D + d] = std::sqrt(1.5) * iqr[d];
            }
            weights[k] = 1.0 / static_cast<double>(n);
            ++rescues;
            continue;
        }
        weights[k] = nk[k] / total;
        for (std::size_t d = 0; d < D; ++d) {
            const double var = (ss_t[d * K + k] + 2.0 * iqr[d] * iqr[d] / root_n) / (nk[k] + 2.0 / root_n);
            scales[k * D + d] = std::sqrt(var);
        }
    }
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& w : weights) w /= wsum;
    return GaussianMixture(std::move(weights), std::move(means), std::move(scales), D);
}

} // namespace

EMResult em_fit(const SampleSet& data, const EMConfig& cfg, const GaussianMixture& init) {
    return em_fit(data, inter_quantile_range(data), cfg, init);
}

EMResult em_fit(const SampleSet& data, std::span<const double> iqr, const EMConfig& cfg,
                const GaussianMixture& init) {
    cfg.validate();
    require(!data.empty(), "em_fit: no data");
    require_dim(init.dim(), data.dim(), "em_fit");
    require_dim(iqr.size(), data.dim(), "em_fit (iqr)");
    const std::size_t n = data.size(), K = init.components();

    std::vector<double> gamma(n * K), log_dens(n);
    EMResult res{.mixture = init, .penalized_trace = {}};
    double ll_prev = e_step(init, data, gamma, log_dens);
    if (!std::isfinite(ll_prev)) fail(ErrorCode::Numeric, "em_fit: non-finite log-likelihood at iteration 0");
    res.penalized_trace.push_back(ll_prev + em_penalty(init, iqr, n));
    res.loglik = ll_prev;

    for (std::size_t t = 1; t <= cfg.max_iters; ++t) {
        res.mixture = m_step(data, iqr, gamma, log_dens, K, res.rescued_components);
        const double ll = e_step(res.mixture, data, gamma, log_dens);
        if (!std::isfinite(ll))
            fail(ErrorCode::Numeric, "em_fit: non-finite log-likelihood at iteration " + std::to_string(t));
        res.penalized_trace.push_back(ll + em_penalty(res.mixture, iqr, n));
        res.iterations = t;
        res.loglik = ll;
        if (std::abs(1.0 - ll / ll_prev) < cfg.rel_tol) {
            res.converged = true;
            break;
        }
        ll_prev = ll;
    }
    res.penalized_loglik = res.penalized_trace.back();
    return res;
}

EMResult multi_start_fit(const SampleSet& data, const EMConfig& cfg) {
    cfg.validate();
    const auto iqr = inter_quantile_range(data);
    std::vector<std::optional<EMResult>> results(cfg.restarts);
    std::vector<std::string> errors(cfg.restarts);
    parallel_for(cfg.restarts, cfg.threads, [&](std::size_t r) {
        try {
            auto init = em_initialize(data, iqr, cfg, r);
            results[r] = em_fit(data, iqr, cfg, init);
            results[r]->restart_index = r;
        } catch (const Error& e) {
            errors[r] = e.what();
        }
    });
    std::optional<std::size_t> best;
    for (std::size_t r = 0; r < cfg.restarts; ++r)
        if (results[r] && (!best || results[r]->loglik > results[*best]->loglik)) best = r;
    if (!best) {
        std::string msg = "multi_start_fit: all restarts failed:";
        for (std::size_t r = 0; r < cfg.restarts; ++r) msg += " [" + std::to_string(r) + "] " + errors[r];
        fail(ErrorCode::Numeric, msg);
    }
    return std::move(*results[*best]);
}

} // namespace warpbridge
