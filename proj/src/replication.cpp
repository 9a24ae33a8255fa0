#include "warpbridge/replication.hpp"

#include <chrono>
#include <cmath>
#include <mutex>

#include "warpbridge/error.hpp"
#include "warpbridge/parallel.hpp"
#include "warpbridge/stats.hpp"

namespace warpbridge {

namespace {

constexpr std::array<std::pair<EstimatorId, const char*>, 9> kEstimatorNames{{
    {EstimatorId::WarpU, "warpu"},
    {EstimatorId::Mix, "mix"},
    {EstimatorId::RatioUDiff, "ratio:U_diff"},
    {EstimatorId::RatioMixDiff, "ratio:mix_diff"},
    {EstimatorId::RatioUDirect, "ratio:U_direct"},
    {EstimatorId::Vanilla, "vanilla"},
    {EstimatorId::Warp1, "warp1"},
    {EstimatorId::Warp2, "warp2"},
    {EstimatorId::Warp3, "warp3"},
}};

std::size_t rounded(double x) { return static_cast<std::size_t>(std::llround(x)); }

PipelineConfig pipeline_config(const GridCell& cell, const EMConfig& em, std::size_t n, std::uint64_t seed) {
    PipelineConfig cfg;
    cfg.components = cell.components;
    if (cell.fit_per_component) cfg.fit_size = rounded(*cell.fit_per_component * static_cast<double>(cell.components));
    cfg.reference_size = rounded(cell.reference_ratio * static_cast<double>(n));
    cfg.subsets = cell.subsets;
    cfg.em = em;
    cfg.seed = seed;
    return cfg;
}

struct Outcome {
    bool ok = false;
    std::string error;
    double lambda = 0.0;
    double variance = 0.0;
    std::array<double, 2> halves{};
    double t_em = 0.0;
    double t_total = 0.0;
};

} // namespace

EstimatorId parse_estimator(const std::string& id) {
    for (const auto& [e, name] : kEstimatorNames)
        if (id == name) return e;
    fail(ErrorCode::InvalidArgument, "unknown estimator '" + id +
                                         "' (expected warpu, mix, ratio:U_diff, ratio:mix_diff, ratio:U_direct, "
                                         "vanilla, warp1, warp2 or warp3)");
}

std::string to_string(EstimatorId id) {
    for (const auto& [e, name] : kEstimatorNames)
        if (e == id) return name;
    fail(ErrorCode::Internal, "unnamed estimator");
}

bool is_ratio(EstimatorId id) {
    return id == EstimatorId::RatioUDiff || id == EstimatorId::RatioMixDiff || id == EstimatorId::RatioUDirect;
}

void ExperimentConfig::validate() const {
    require(reps >= 2, "ExperimentConfig: reps must be at least 2");
    require(!grid.empty(), "ExperimentConfig: grid must be nonempty");
    require(n >= 4, "ExperimentConfig: n must be at least 4");
    em.validate();
    warpbridge::validate(target);
    if (is_ratio(estimator)) {
        require(target2.has_value(), "ExperimentConfig: estimator " + to_string(estimator) + " needs target2");
        warpbridge::validate(*target2);
        require(builtin_dim(*target2) == builtin_dim(target), "ExperimentConfig: target2 dimension differs");
    }
    for (const auto& c : grid) {
        require(c.components >= 1, "ExperimentConfig: K must be at least 1");
        require(c.reference_ratio > 0.0, "ExperimentConfig: m/n must be positive");
        require(c.subsets >= 2, "ExperimentConfig: S must be at least 2");
        if (c.fit_per_component) require(*c.fit_per_component > 0.0, "ExperimentConfig: L/K must be positive");
    }
}

EstimateReport run_estimator(EstimatorId id, const TargetDensity& target, const SampleSet& draws,
                             const TargetDensity* target2, const SampleSet* draws2, const GridCell& cell,
                             const EMConfig& em, std::uint64_t seed) {
    const auto cfg = pipeline_config(cell, em, draws.size(), seed);
    auto second = [&]() -> std::pair<const TargetDensity&, const SampleSet&> {
        require(target2 != nullptr && draws2 != nullptr, to_string(id) + " needs a second target and draws");
        return {*target2, *draws2};
    };
    switch (id) {
    case EstimatorId::WarpU: return estimate_lambda_warpu(target, draws, cfg);
    case EstimatorId::Mix: return estimate_lambda_mix(target, draws, cfg);
    case EstimatorId::RatioUDiff: {
        auto [t2, d2] = second();
        return estimate_ratio(target, draws, t2, d2, cfg, RatioProcedure::UDiff);
    }
    case EstimatorId::RatioMixDiff: {
        auto [t2, d2] = second();
        return estimate_ratio(target, draws, t2, d2, cfg, RatioProcedure::MixDiff);
    }
    case EstimatorId::RatioUDirect: {
        auto [t2, d2] = second();
        return estimate_ratio(target, draws, t2, d2, cfg, RatioProcedure::UDirect);
    }
    case EstimatorId::Vanilla:
    case EstimatorId::Warp1:
    case EstimatorId::Warp2:
    case EstimatorId::Warp3: {
        const int level = static_cast<int>(id) - static_cast<int>(EstimatorId::Vanilla);
        const auto t0 = std::chrono::steady_clock::now();
        const WarpSpec spec = moment_warp(level, draws);
        auto r = estimate_lambda_fixed_warp(target, draws, spec, *cfg.reference_size, seed, cfg.bridge);
        r.timings.total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        r.pps = 1.0 / (r.variance_hat * r.timings.total);
        return r;
    }
    }
    fail(ErrorCode::Internal, "unhandled estimator");
}

ReplicationReport run_replications(const ExperimentConfig& cfg) {
    cfg.validate();
    const TargetDensity target = make_target(cfg.target);
    std::optional<TargetDensity> target2;
    if (is_ratio(cfg.estimator)) target2 = make_target(*cfg.target2);
    const double truth = builtin_log_c(cfg.target) - (target2 ? builtin_log_c(*cfg.target2) : 0.0);

    EMConfig em = cfg.em;
    em.threads = 1;
    const std::size_t C = cfg.grid.size(), R = cfg.reps;
    std::vector<Outcome> outcomes(C * R);

    parallel_for(R, cfg.threads, [&](std::size_t r) {
        const std::uint64_t rseed = derive_seed(cfg.seed, stream::replication, r);
        SampleSet draws, draws2;
        try {
            draws = target.sample(cfg.n, derive_seed(rseed, stream::target_draws, 0));
            if (target2) draws2 = target2->sample(cfg.n, derive_seed(rseed, stream::target_draws, 1));
        } catch (const std::exception& e) {
            for (std::size_t c = 0; c < C; ++c) outcomes[c * R + r].error = e.what();
            return;
        }
        for (std::size_t c = 0; c < C; ++c) {
            Outcome& o = outcomes[c * R + r];
            try {
                const auto t0 = std::chrono::steady_clock::now();
                const auto rep = run_estimator(cfg.estimator, target, draws, target2 ? &*target2 : nullptr,
                                               target2 ? &draws2 : nullptr, cfg.grid[c], em, rseed);
                o.t_total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                o.lambda = rep.lambda_hat;
                o.variance = rep.variance_hat;
                o.halves = rep.half_estimates;
                o.t_em = rep.timings.em;
                o.ok = std::isfinite(o.lambda);
                if (!o.ok) o.error = "non-finite estimate";
            } catch (const std::exception& e) {
                o.error = e.what();
            }
        }
    });

    ReplicationReport report;
    for (std::size_t c = 0; c < C; ++c) {
        CellReport cell;
        cell.cell = cfg.grid[c];
        cell.truth = truth;
        std::vector<double> t_em, t_total;
        for (std::size_t r = 0; r < R; ++r) {
            const Outcome& o = outcomes[c * R + r];
            if (!o.ok) {
                ++cell.failures;
                if (cell.failure_messages.size() < 5)
                    cell.failure_messages.push_back("replication " + std::to_string(r) + ": " + o.error);
                continue;
            }
            cell.estimates.push_back(o.lambda);
            cell.variance_hats.push_back(o.variance);
            cell.half_estimates.push_back(o.halves);
            t_em.push_back(o.t_em);
            t_total.push_back(o.t_total);
        }
        cell.completed = cell.estimates.size();
        if (cell.failures * 100 > R) {
            std::string msg = "cell " + std::to_string(c) + ": " + std::to_string(cell.failures) + " of " +
                              std::to_string(R) + " replications failed (limit 1%)";
            for (const auto& m : cell.failure_messages) msg += "\n  " + m;
            fail(ErrorCode::Numeric, msg);
        }
        require(cell.completed >= 2, "cell " + std::to_string(c) + ": fewer than two successful replications");
        cell.stats = summarize(cell.estimates, truth);
        cell.mean_variance_hat = mean(cell.variance_hats);
        cell.median_t_em = median(t_em);
        cell.median_t_total = median(t_total);
        cell.pps = 1.0 / (cell.stats.sd * cell.stats.sd * cell.median_t_total);
        if (!cfg.keep_raw) {
            cell.estimates.clear();
            cell.variance_hats.clear();
            cell.half_estimates.clear();
        }
        report.cells.push_back(std::move(cell));
    }
    return report;
}

LadderReport warp_ladder_study(const BuiltinSpec& spec, std::size_t n, std::size_t m, std::size_t reps,
                               std::uint64_t seed, std::size_t components, std::size_t threads) {
    require(builtin_dim(spec) == 1, "warp_ladder_study: the target must be one-dimensional");
    require(reps >= 2, "warp_ladder_study: reps must be at least 2");
    const TargetDensity target = make_target(spec);
    LadderReport out;
    out.truth = builtin_log_c(spec);
    out.names = {"vanilla", "warp1", "warp2", "warp3", "warpu"};
    const std::array<EstimatorId, 5> ids{EstimatorId::Vanilla, EstimatorId::Warp1, EstimatorId::Warp2,
                                         EstimatorId::Warp3, EstimatorId::WarpU};
    out.estimates.assign(ids.size(), std::vector<double>(reps));
    GridCell cell;
    cell.components = components;
    cell.reference_ratio = static_cast<double>(m) / static_cast<double>(n);
    EMConfig em;
    parallel_for(reps, threads, [&](std::size_t r) {
        const std::uint64_t rseed = derive_seed(seed, stream::replication, r);
        const auto draws = target.sample(n, derive_seed(rseed, stream::target_draws, 0));
        for (std::size_t e = 0; e < ids.size(); ++e)
            out.estimates[e][r] = run_estimator(ids[e], target, draws, nullptr, nullptr, cell, em, rseed).lambda_hat;
    });
    for (const auto& est : out.estimates) out.stats.push_back(summarize(est, out.truth));
    return out;
}

} // namespace warpbridge
