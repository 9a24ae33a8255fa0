#include "warpbridge/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numeric>

#include "warpbridge/error.hpp"
#include "warpbridge/numeric.hpp"
#include "warpbridge/parallel.hpp"
#include "warpbridge/rng.hpp"
#include "warpbridge/warp.hpp"

namespace warpbridge {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t fingerprint(const SampleSet& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : s.values()) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        h = mix64(h ^ bits);
    }
    return h;
}

struct Halves {
    SampleSet first;
    SampleSet second;
};

Halves split_halves(const SampleSet& draws, std::vector<std::string>& warnings) {
    std::size_t n = draws.size();
    if (n % 2 == 1) {
        warnings.push_back("odd sample size " + std::to_string(n) + ": dropped the last draw");
        --n;
    }
    require(n >= 2, "pipeline: need at least two draws");
    return {draws.slice(0, n / 2), draws.slice(n / 2, n / 2)};
}

EMConfig em_config(const PipelineConfig& cfg, std::size_t components, std::uint64_t seed) {
    EMConfig em = cfg.em;
    em.components = components;
    em.seed = seed;
    return em;
}

/// One orientation's output: the half estimate, its sub-estimates and the mixture(s).
struct Orientation {
    double lambda = 0.0;
    bool converged = true;
    std::vector<double> subsets;
    std::vector<GaussianMixture> mixtures;
    double t_em = 0.0;
    double t_bridge = 0.0;
};

enum class SingleKind { WarpU, Mix };

Orientation single_orientation(SingleKind kind, const TargetDensity& target, const SampleSet& fit_half,
                               const SampleSet& bridge_half, std::size_t m_half, const PipelineConfig& cfg) {
    const std::uint64_t oseed = orientation_seed(cfg.seed, fit_half);
    const std::size_t L = cfg.resolved_fit_size(2 * fit_half.size());
    Orientation o;

    auto t0 = Clock::now();
    const auto fit = multi_start_fit(fit_half.slice(0, L),
                                     em_config(cfg, cfg.components, derive_seed(oseed, stream::em_fit)));
    o.t_em = seconds_since(t0);
    o.mixtures.push_back(fit.mixture);

    t0 = Clock::now();
    BridgeInput input;
    if (kind == SingleKind::WarpU) {
        const WarpSpec spec = MixtureWarp{fit.mixture};
        const auto warped = warp_samples(spec, bridge_half, derive_seed(oseed, stream::warp_rows));
        const auto z = reference_draws(target.dim(), m_half, derive_seed(oseed, stream::reference_draws));
        input = warped_bridge_input(warped_target(spec, target), warped.points, z);
    } else {
        Rng rng = make_rng(derive_seed(oseed, stream::reference_draws));
        const auto x = fit.mixture.sample(m_half, rng);
        input.log_q1_at_1 = target.log_q_batch(bridge_half);
        input.log_q1_at_2 = target.log_q_batch(x);
        for (std::size_t i = 0; i < bridge_half.size(); ++i)
            input.log_q2_at_1.push_back(fit.mixture.log_pdf(bridge_half.row(i)));
        for (std::size_t i = 0; i < x.size(); ++i) input.log_q2_at_2.push_back(fit.mixture.log_pdf(x.row(i)));
    }
    const auto res = bridge_optimal(input, cfg.bridge);
    o.lambda = res.lambda_hat;
    o.converged = res.converged;
    o.subsets = subset_estimates(input, cfg.subsets, derive_seed(oseed, stream::subset_shuffle), cfg.bridge);
    o.t_bridge = seconds_since(t0);
    return o;
}

EstimateReport assemble(const std::array<Orientation, 2>& o, std::vector<std::string> warnings,
                        Clock::time_point t_start) {
    EstimateReport r;
    r.half_estimates = {o[0].lambda, o[1].lambda};
    r.lambda_hat = 0.5 * (o[0].lambda + o[1].lambda);
    r.subset_estimates = {o[0].subsets, o[1].subsets};
    r.variance_hat = subset_variance(o[0].subsets, o[1].subsets);
    for (const auto& side : o) {
        r.mixtures.insert(r.mixtures.end(), side.mixtures.begin(), side.mixtures.end());
        r.timings.em += side.t_em;
        r.timings.bridge += side.t_bridge;
        r.converged = r.converged && side.converged;
    }
    r.warnings = std::move(warnings);
    r.timings.total = seconds_since(t_start);
    r.pps = 1.0 / (r.variance_hat * r.timings.total);
    return r;
}

EstimateReport estimate_single(SingleKind kind, const TargetDensity& target, const SampleSet& draws,
                               const PipelineConfig& cfg) {
    const auto t_start = Clock::now();
    require_dim(draws.dim(), target.dim(), "estimate_lambda");
    std::vector<std::string> warnings;
    auto halves = split_halves(draws, warnings);
    const std::size_t n = 2 * halves.first.size();
    auto more = cfg.validate(n);
    warnings.insert(warnings.end(), more.begin(), more.end());
    const std::size_t m_half = cfg.resolved_reference_size(n) / 2;
    std::array<Orientation, 2> o{
        single_orientation(kind, target, halves.first, halves.second, m_half, cfg),
        single_orientation(kind, target, halves.second, halves.first, m_half, cfg),
    };
    return assemble(o, std::move(warnings), t_start);
}

} // namespace

std::size_t PipelineConfig::resolved_fit_size(std::size_t n) const {
    return fit_size ? *fit_size : std::min(50 * components, n / 2);
}

std::size_t PipelineConfig::resolved_reference_size(std::size_t n) const {
    return reference_size ? *reference_size : n;
}

std::vector<std::string> PipelineConfig::validate(std::size_t n) const {
    require(components >= 1, "PipelineConfig: K must be at least 1");
    require(subsets >= 2, "PipelineConfig: S must be at least 2");
    require(n >= 2 * components, "PipelineConfig: need n >= 2K");
    const std::size_t L = resolved_fit_size(n);
    require(L <= n / 2, "PipelineConfig: L = " + std::to_string(L) + " exceeds n/2 = " + std::to_string(n / 2));
    require(L >= std::max<std::size_t>(components, 4), "PipelineConfig: L must be at least max(K, 4)");
    const std::size_t m = resolved_reference_size(n);
    require(m >= 2 * subsets, "PipelineConfig: m must be at least 2S");
    require(n / 2 >= subsets, "PipelineConfig: each half needs at least S draws");
    std::vector<std::string> warnings;
    if (components * 100 > n)
        warnings.push_back("K = " + std::to_string(components) + " exceeds the rule of thumb K <= n/100 (n = " +
                           std::to_string(n) + ")");
    return warnings;
}

std::uint64_t orientation_seed(std::uint64_t base, const SampleSet& fit_half) {
    return derive_seed(base, stream::orientation, fingerprint(fit_half));
}

SampleSet reference_draws(std::size_t dim, std::size_t count, std::uint64_t seed) {
    require(count >= 1, "reference_draws: count must be positive");
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> v(dim * count);
    for (double& x : v) x = normal(rng);
    return SampleSet(dim, std::move(v), seed, "reference");
}

BridgeInput warped_bridge_input(const TargetDensity& warped, const SampleSet& points, const SampleSet& reference) {
    require_dim(points.dim(), warped.dim(), "warped_bridge_input");
    require_dim(reference.dim(), warped.dim(), "warped_bridge_input");
    // One batched call covers both sample sets.
    std::vector<double> rows(points.values().begin(), points.values().end());
    rows.insert(rows.end(), reference.values().begin(), reference.values().end());
    std::vector<double> lq(points.size() + reference.size());
    warped.log_q_batch(rows, lq);
    BridgeInput in;
    in.log_q1_at_1.assign(lq.begin(), lq.begin() + static_cast<std::ptrdiff_t>(points.size()));
    in.log_q1_at_2.assign(lq.begin() + static_cast<std::ptrdiff_t>(points.size()), lq.end());
    for (std::size_t i = 0; i < points.size(); ++i) in.log_q2_at_1.push_back(std_normal_logpdf(points.row(i)));
    for (std::size_t i = 0; i < reference.size(); ++i) in.log_q2_at_2.push_back(std_normal_logpdf(reference.row(i)));
    return in;
}

std::vector<double> subset_estimates(const BridgeInput& input, std::size_t subsets, std::uint64_t seed,
                                     const BridgeOptions& opts) {
    require(subsets >= 2, "subset_estimates: S must be at least 2");
    require(input.n1() >= subsets && input.n2() >= subsets, "subset_estimates: fewer draws than subsets");
    Rng rng = make_rng(seed);
    auto permutation = [&](std::size_t n) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t i = n; i > 1; --i) {
            std::uniform_int_distribution<std::size_t> pick(0, i - 1);
            std::swap(idx[i - 1], idx[pick(rng)]);
        }
        return idx;
    };
    const auto p1 = permutation(input.n1());
    const auto p2 = permutation(input.n2());
    auto block = [&](const std::vector<std::size_t>& p, std::size_t s) {
        const std::size_t a = s * p.size() / subsets, b = (s + 1) * p.size() / subsets;
        return std::span<const std::size_t>(p.data() + a, b - a);
    };
    std::vector<double> out(subsets);
    for (std::size_t s = 0; s < subsets; ++s)
        out[s] = bridge_optimal(input.subset(block(p1, s), block(p2, s)), opts).lambda_hat;
    return out;
}

EstimateReport estimate_lambda_warpu(const TargetDensity& target, const SampleSet& draws, const PipelineConfig& cfg) {
    return estimate_single(SingleKind::WarpU, target, draws, cfg);
}

EstimateReport estimate_lambda_mix(const TargetDensity& target, const SampleSet& draws, const PipelineConfig& cfg) {
    return estimate_single(SingleKind::Mix, target, draws, cfg);
}

namespace {

EstimateReport difference(const EstimateReport& a, const EstimateReport& b) {
    EstimateReport r;
    r.half_estimates = {a.half_estimates[0] - b.half_estimates[0], a.half_estimates[1] - b.half_estimates[1]};
    r.lambda_hat = a.lambda_hat - b.lambda_hat;
    for (int i = 0; i < 2; ++i) {
        r.subset_estimates[i].resize(a.subset_estimates[i].size());
        for (std::size_t s = 0; s < r.subset_estimates[i].size(); ++s)
            r.subset_estimates[i][s] = a.subset_estimates[i][s] - b.subset_estimates[i][s];
    }
    // The two estimates use independent data, so their variances add.
    r.variance_hat = a.variance_hat + b.variance_hat;
    r.mixtures = a.mixtures;
    r.mixtures.insert(r.mixtures.end(), b.mixtures.begin(), b.mixtures.end());
    r.timings = {a.timings.em + b.timings.em, a.timings.bridge + b.timings.bridge, a.timings.total + b.timings.total};
    r.pps = 1.0 / (r.variance_hat * r.timings.total);
    r.converged = a.converged && b.converged;
    r.warnings = a.warnings;
    r.warnings.insert(r.warnings.end(), b.warnings.begin(), b.warnings.end());
    return r;
}

struct FittedWarp {
    WarpSpec spec;
    SampleSet warped;
};

FittedWarp fit_and_warp(const SampleSet& fit_half, const SampleSet& bridge_half, std::size_t components,
                        const PipelineConfig& cfg, double& t_em) {
    const std::uint64_t oseed = orientation_seed(cfg.seed, fit_half);
    PipelineConfig local = cfg;
    local.components = components;
    const std::size_t L = local.resolved_fit_size(2 * fit_half.size());
    auto t0 = Clock::now();
    const auto fit = multi_start_fit(fit_half.slice(0, L), em_config(cfg, components, derive_seed(oseed, stream::em_fit)));
    t_em += seconds_since(t0);
    WarpSpec spec = MixtureWarp{fit.mixture};
    auto warped = warp_samples(spec, bridge_half, derive_seed(oseed, stream::warp_rows)).points;
    return {std::move(spec), std::move(warped)};
}

EstimateReport direct_ratio(const TargetDensity& t1, const SampleSet& d1, const TargetDensity& t2,
                            const SampleSet& d2, const PipelineConfig& cfg) {
    const auto t_start = Clock::now();
    require_dim(d1.dim(), t1.dim(), "estimate_ratio (dataset 1)");
    require_dim(d2.dim(), t2.dim(), "estimate_ratio (dataset 2)");
    require_dim(t2.dim(), t1.dim(), "estimate_ratio");
    std::vector<std::string> warnings;
    auto h1 = split_halves(d1, warnings);
    auto h2 = split_halves(d2, warnings);
    const std::size_t K2 = cfg.components2.value_or(cfg.components);
    {
        auto w = cfg.validate(2 * h1.first.size());
        warnings.insert(warnings.end(), w.begin(), w.end());
        PipelineConfig c2 = cfg;
        c2.components = K2;
        w = c2.validate(2 * h2.first.size());
        warnings.insert(warnings.end(), w.begin(), w.end());
    }
    std::array<Orientation, 2> o;
    for (int side = 0; side < 2; ++side) {
        const SampleSet& fit1 = side == 0 ? h1.first : h1.second;
        const SampleSet& br1 = side == 0 ? h1.second : h1.first;
        const SampleSet& fit2 = side == 0 ? h2.first : h2.second;
        const SampleSet& br2 = side == 0 ? h2.second : h2.first;
        Orientation& out = o[side];
        const auto w1 = fit_and_warp(fit1, br1, cfg.components, cfg, out.t_em);
        const auto w2 = fit_and_warp(fit2, br2, K2, cfg, out.t_em);
        out.mixtures = {std::get<MixtureWarp>(w1.spec).mixture, std::get<MixtureWarp>(w2.spec).mixture};

        const auto t0 = Clock::now();
        const auto qt1 = warped_target(w1.spec, t1);
        const auto qt2 = warped_target(w2.spec, t2);
        BridgeInput input;
        input.log_q1_at_1 = qt1.log_q_batch(w1.warped);
        input.log_q2_at_1 = qt2.log_q_batch(w1.warped);
        input.log_q1_at_2 = qt1.log_q_batch(w2.warped);
        input.log_q2_at_2 = qt2.log_q_batch(w2.warped);
        const auto res = bridge_optimal(input, cfg.bridge);
        out.lambda = res.lambda_hat;
        out.converged = res.converged;
        const std::uint64_t sseed =
            derive_seed(orientation_seed(cfg.seed, fit1) ^ orientation_seed(cfg.seed, fit2), stream::subset_shuffle);
        out.subsets = subset_estimates(input, cfg.subsets, sseed, cfg.bridge);
        out.t_bridge = seconds_since(t0);
    }
    return assemble(o, std::move(warnings), t_start);
}

} // namespace

EstimateReport estimate_ratio(const TargetDensity& target1, const SampleSet& draws1, const TargetDensity& target2,
                              const SampleSet& draws2, const PipelineConfig& cfg, RatioProcedure procedure) {
    switch (procedure) {
    case RatioProcedure::UDiff:
        return difference(estimate_lambda_warpu(target1, draws1, cfg), estimate_lambda_warpu(target2, draws2, cfg));
    case RatioProcedure::MixDiff:
        return difference(estimate_lambda_mix(target1, draws1, cfg), estimate_lambda_mix(target2, draws2, cfg));
    case RatioProcedure::UDirect: return direct_ratio(target1, draws1, target2, draws2, cfg);
    }
    fail(ErrorCode::Internal, "unknown ratio procedure");
}

EstimatorStats summarize(std::span<const double> estimates, double truth) {
    require(estimates.size() >= 2, "summarize: need at least two estimates");
    const double n = static_cast<double>(estimates.size());
    double mean = 0.0;
    for (double v : estimates) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : estimates) ss += (v - mean) * (v - mean);
    EstimatorStats s;
    s.bias = mean - truth;
    s.sd = std::sqrt(ss / n);
    s.rmse = std::sqrt(s.bias * s.bias + s.sd * s.sd);
    return s;
}

double estimate_lambda_leaky(const TargetDensity& target, const SampleSet& draws, const PipelineConfig& cfg) {
    require_dim(draws.dim(), target.dim(), "estimate_lambda_leaky");
    const std::uint64_t oseed = orientation_seed(cfg.seed, draws);
    const auto fit = multi_start_fit(draws, em_config(cfg, cfg.components, derive_seed(oseed, stream::em_fit)));
    const WarpSpec spec = MixtureWarp{fit.mixture};
    const auto warped = warp_samples(spec, draws, derive_seed(oseed, stream::warp_rows));
    const auto z = reference_draws(target.dim(), cfg.resolved_reference_size(draws.size()),
                                   derive_seed(oseed, stream::reference_draws));
    return bridge_optimal(warped_bridge_input(warped_target(spec, target), warped.points, z), cfg.bridge).lambda_hat;
}

BiasDemoReport adaptive_bias_demo(const TargetDensity& target, std::size_t n, std::size_t components, std::size_t reps,
                                  std::uint64_t seed, std::size_t threads) {
    require(reps >= 2, "adaptive_bias_demo: need at least two replications to estimate bias");
    require(target.true_log_c().has_value(), "adaptive_bias_demo: target constant must be known");
    require(target.has_sampler(), "adaptive_bias_demo: target needs a direct sampler");
    BiasDemoReport rep;
    rep.true_lambda = *target.true_log_c();
    rep.leaky_estimates.resize(reps);
    rep.split_estimates.resize(reps);
    parallel_for(reps, threads, [&](std::size_t r) {
        const std::uint64_t rseed = derive_seed(seed, stream::replication, r);
        const auto draws = target.sample(n, derive_seed(rseed, stream::target_draws));
        PipelineConfig cfg;
        cfg.components = components;
        cfg.seed = rseed;
        rep.split_estimates[r] = estimate_lambda_warpu(target, draws, cfg).lambda_hat;
        rep.leaky_estimates[r] = estimate_lambda_leaky(target, draws, cfg);
    });
    rep.leaky = summarize(rep.leaky_estimates, rep.true_lambda);
    rep.split = summarize(rep.split_estimates, rep.true_lambda);
    return rep;
}

EstimateReport estimate_lambda_fixed_warp(const TargetDensity& target, const SampleSet& draws, const WarpSpec& spec,
                                          std::size_t m, std::uint64_t seed, const BridgeOptions& opts) {
    const auto t_start = Clock::now();
    require_dim(draws.dim(), target.dim(), "estimate_lambda_fixed_warp");
    require_dim(warp_dim(spec), target.dim(), "estimate_lambda_fixed_warp (warp)");
    require(draws.size() >= 2 && m >= 2, "estimate_lambda_fixed_warp: need at least two draws on each side");
    const auto warped = warp_samples(spec, draws, derive_seed(seed, stream::warp_rows));
    const auto z = reference_draws(target.dim(), m, derive_seed(seed, stream::reference_draws));
    const auto input = warped_bridge_input(warped_target(spec, target), warped.points, z);
    const auto res = bridge_optimal(input, opts);

    EstimateReport r;
    r.lambda_hat = res.lambda_hat;
    r.half_estimates = {res.lambda_hat, res.lambda_hat};
    r.variance_hat = plug_in_variance(input, res.lambda_hat);
    r.converged = res.converged;
    r.timings.bridge = seconds_since(t_start);
    r.timings.total = r.timings.bridge;
    r.pps = 1.0 / (r.variance_hat * r.timings.total);
    return r;
}

WarpSpec moment_warp(int level, const SampleSet& draws) {
    require(level >= 0 && level <= 3, "moment_warp: level must be 0, 1, 2 or 3");
    require(draws.size() >= 2, "moment_warp: need at least two draws");
    const std::size_t D = draws.dim();
    if (level == 0) return ShiftWarp{std::vector<double>(D, 0.0)};
    std::vector<double> mu(D), sd(D);
    for (std::size_t d = 0; d < D; ++d) {
        const auto col = draws.column(d);
        double m = 0.0;
        for (double v : col) m += v;
        m /= static_cast<double>(col.size());
        double ss = 0.0;
        for (double v : col) ss += (v - m) * (v - m);
        mu[d] = m;
        sd[d] = std::sqrt(ss / static_cast<double>(col.size() - 1));
        require(sd[d] > 0.0, "moment_warp: zero spread in dimension " + std::to_string(d));
    }
    if (level == 1) return ShiftWarp{std::move(mu)};
    if (level == 2) return ScaleWarp{std::move(mu), std::move(sd)};
    return SymmetrizeWarp{std::move(mu), std::move(sd)};
}

} // namespace warpbridge
