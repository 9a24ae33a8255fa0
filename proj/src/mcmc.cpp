#include "warpbridge/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_set>

#include "warpbridge/error.hpp"
#include "warpbridge/numeric.hpp"
#include "warpbridge/parallel.hpp"
#include "warpbridge/stats.hpp"

namespace warpbridge {

namespace {

struct PointHash {
    std::size_t operator()(const std::vector<double>& v) const noexcept {
        std::uint64_t h = 0x84222325cbf29ce4ULL;
        for (double x : v) {
            std::uint64_t bits;
            std::memcpy(&bits, &x, sizeof bits);
            h = mix64(h ^ bits);
        }
        return static_cast<std::size_t>(h);
    }
};

void check_state(const GaussianMixture& mix, const TargetDensity& target, std::span<const double> w) {
    require_dim(mix.dim(), target.dim(), "warp-U chain (mixture vs target)");
    require_dim(w.size(), target.dim(), "warp-U chain (state)");
    for (double v : w) require(std::isfinite(v), "warp-U chain: state must be finite");
}

} // namespace

std::vector<double> psi_star_weights(const GaussianMixture& mix, const TargetDensity& target,
                                     std::span<const double> w_tilde) {
    const std::size_t K = mix.components(), D = mix.dim();
    require_dim(w_tilde.size(), D, "psi_star_weights");
    for (double v : w_tilde) require(std::isfinite(v), "psi_star_weights: w~ must be finite");

    std::vector<double> images(K * D);
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t d = 0; d < D; ++d)
            images[k * D + d] = mix.scale(k)[d] * w_tilde[d] + mix.mean(k)[d];
    std::vector<double> lq(K);
    target.log_q_batch(images, lq);

    std::vector<double> logw(K);
    for (std::size_t k = 0; k < K; ++k) {
        const std::span<const double> x(images.data() + k * D, D);
        logw[k] = lq[k] == kNegInf ? kNegInf : std::log(mix.weight(k)) + lq[k] - mix.log_pdf(x);
    }
    const double norm = log_sum_exp(logw);
    if (norm == kNegInf) fail(ErrorCode::Numeric, "chain escaped support: q is zero at every H_k(w~)");
    for (double& v : logw) v = std::exp(v - norm);
    return logw;
}

ChainState chain_step(const ChainState& state, const GaussianMixture& mix, const TargetDensity& target, Rng& rng) {
    check_state(mix, target, state.w);
    const std::size_t D = mix.dim();
    const std::size_t psi = draw_index_from_probabilities(mix.responsibility(state.w), uniform01(rng));

    std::vector<double> w_tilde(D);
    for (std::size_t d = 0; d < D; ++d) w_tilde[d] = (state.w[d] - mix.mean(psi)[d]) / mix.scale(psi)[d];
    const std::size_t psi_star =
        draw_index_from_probabilities(psi_star_weights(mix, target, w_tilde), uniform01(rng));

    ChainState next;
    next.t = state.t + 1;
    next.last_psi = psi;
    next.last_psi_star = psi_star;
    if (psi_star == psi) {
        next.w = state.w;
    } else {
        next.w.resize(D);
        for (std::size_t d = 0; d < D; ++d) next.w[d] = mix.scale(psi_star)[d] * w_tilde[d] + mix.mean(psi_star)[d];
    }
    return next;
}

ChainResult run_chain(std::span<const double> w0, const ChainOptions& opts, const GaussianMixture& mix,
                      const TargetDensity& target, std::uint64_t seed) {
    require(opts.steps >= 1, "run_chain: steps must be at least 1");
    require(opts.thin >= 1, "run_chain: thin must be at least 1");
    require(opts.max_stored >= 2, "run_chain: max_stored must be at least 2");
    check_state(mix, target, w0);
    const std::size_t D = mix.dim();

    Rng rng = make_rng(derive_seed(seed, stream::chain));
    ChainState state{std::vector<double>(w0.begin(), w0.end()), 0, 0, 0};
    std::unordered_set<std::vector<double>, PointHash> seen;
    std::vector<double> stored;
    std::size_t thin = opts.thin;

    for (std::size_t t = 1; t <= opts.steps; ++t) {
        state = chain_step(state, mix, target, rng);
        seen.insert(state.w);
        if (t % thin != 0) continue;
        stored.insert(stored.end(), state.w.begin(), state.w.end());
        if (stored.size() / D > opts.max_stored) {
            // Storage cap reached: keep every second stored state and double the stride.
            const std::size_t rows = stored.size() / D;
            std::size_t out = 0;
            for (std::size_t r = 1; r < rows; r += 2, ++out)
                std::copy_n(stored.begin() + static_cast<std::ptrdiff_t>(r * D), D,
                            stored.begin() + static_cast<std::ptrdiff_t>(out * D));
            stored.resize(out * D);
            thin *= 2;
        }
    }

    ChainResult res;
    const std::size_t rows = stored.size() / D;
    res.diagnostics.steps = opts.steps;
    res.diagnostics.thin = thin;
    res.diagnostics.unique_points = seen.size();
    res.diagnostics.trace.resize(rows);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t d = 0; d < D; ++d) res.diagnostics.trace[r] += stored[r * D + d];
    for (std::size_t d = 0; d < D; ++d) {
        std::vector<double> col(rows);
        for (std::size_t r = 0; r < rows; ++r) col[r] = stored[r * D + d];
        res.diagnostics.acf.push_back(autocorrelation(col, opts.max_lag));
    }
    res.diagnostics.acf.push_back(autocorrelation(res.diagnostics.trace, opts.max_lag));
    res.samples = rows == 0 ? SampleSet() : SampleSet(D, std::move(stored), seed, "warpu-chain");
    res.final_state = std::move(state);
    return res;
}

SampleSet run_parallel_chains(const SampleSet& starts, std::size_t steps, const GaussianMixture& mix,
                              const TargetDensity& target, std::uint64_t seed, std::size_t threads) {
    require(!starts.empty(), "run_parallel_chains: no starting points");
    require(steps >= 1, "run_parallel_chains: steps must be at least 1");
    const std::size_t D = starts.dim();
    std::vector<double> finals(starts.size() * D);
    parallel_for(starts.size(), threads, [&](std::size_t i) {
        Rng rng = make_rng(derive_seed(seed, stream::chain, i));
        ChainState s{std::vector<double>(starts.row(i).begin(), starts.row(i).end()), 0, 0, 0};
        for (std::size_t t = 0; t < steps; ++t) s = chain_step(s, mix, target, rng);
        std::copy(s.w.begin(), s.w.end(), finals.begin() + static_cast<std::ptrdiff_t>(i * D));
    });
    return SampleSet(D, std::move(finals), seed, "warpu-chain-finals");
}

} // namespace warpbridge
