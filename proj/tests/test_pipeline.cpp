#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "warpbridge/error.hpp"
#include "warpbridge/pipeline.hpp"
#include "warpbridge/rng.hpp"
#include "warpbridge/targets.hpp"

using namespace warpbridge;

namespace {

TargetDensity matched_target() {
    GaussianMixtureTarget spec;
    spec.mixture = GaussianMixture({0.4, 0.6}, {-2.0, 2.0}, {0.7, 1.0}, 1);
    spec.log_c = 2.0;
    return make_target(spec);
}

SampleSet concat(const SampleSet& a, const SampleSet& b) {
    std::vector<double> v(a.values().begin(), a.values().end());
    v.insert(v.end(), b.values().begin(), b.values().end());
    return SampleSet(a.dim(), std::move(v));
}

bool has_warning(const EstimateReport& r, const std::string& needle) {
    return std::any_of(r.warnings.begin(), r.warnings.end(),
                       [&](const std::string& w) { return w.find(needle) != std::string::npos; });
}

double variance(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(v.size() - 1);
}

} // namespace

TEST_CASE("PipelineConfig defaults and validation") {
    PipelineConfig cfg;
    cfg.components = 3;
    CHECK(cfg.resolved_fit_size(1000) == 150);
    CHECK(cfg.resolved_fit_size(200) == 100);
    CHECK(cfg.resolved_reference_size(1000) == 1000);
    CHECK(cfg.validate(1000).empty());

    const auto warn = cfg.validate(250);
    REQUIRE(warn.size() == 1);
    CHECK(warn[0].find("n/100") != std::string::npos);

    PipelineConfig bad = cfg;
    bad.fit_size = 600;
    CHECK_THROWS_AS(bad.validate(1000), Error);
    bad = cfg;
    bad.reference_size = 9;
    CHECK_THROWS_AS(bad.validate(1000), Error);
    bad = cfg;
    bad.subsets = 1;
    CHECK_THROWS_AS(bad.validate(1000), Error);
    CHECK_THROWS_AS(cfg.validate(5), Error);
}

TEST_CASE("report invariants and bit-reproducibility") {
    const auto target = make_target(preset("trimodal_gaussian_1d"));
    const auto draws = target.sample(1000, 11);
    PipelineConfig cfg;
    cfg.components = 3;
    cfg.seed = 5;
    for (auto* fn : {&estimate_lambda_warpu, &estimate_lambda_mix}) {
        const auto a = fn(target, draws, cfg);
        const auto b = fn(target, draws, cfg);
        CHECK(a.lambda_hat == b.lambda_hat);
        CHECK(a.variance_hat == b.variance_hat);
        CHECK(a.half_estimates == b.half_estimates);
        CHECK(a.lambda_hat == 0.5 * (a.half_estimates[0] + a.half_estimates[1]));
        CHECK(a.variance_hat == subset_variance(a.subset_estimates[0], a.subset_estimates[1]));
        CHECK(a.pps == doctest::Approx(1.0 / (a.variance_hat * a.timings.total)));
        CHECK(a.mixtures.size() == 2);
        CHECK(a.subset_estimates[0].size() == 5);
        CHECK(a.converged);
        CHECK(std::abs(a.lambda_hat - 2.0) < 5.0 * std::sqrt(a.variance_hat));
    }
    PipelineConfig reseeded = cfg;
    reseeded.seed = 6;
    CHECK(estimate_lambda_warpu(target, draws, reseeded).lambda_hat !=
          estimate_lambda_warpu(target, draws, cfg).lambda_hat);
}

TEST_CASE("swapping the halves swaps the half estimates") {
    const auto target = make_target(preset("trimodal_gaussian_1d"));
    const auto draws = target.sample(800, 3);
    const auto swapped = concat(draws.slice(400, 400), draws.slice(0, 400));
    PipelineConfig cfg;
    cfg.components = 3;
    cfg.seed = 17;
    const auto a = estimate_lambda_warpu(target, draws, cfg);
    const auto b = estimate_lambda_warpu(target, swapped, cfg);
    CHECK(a.half_estimates[0] == b.half_estimates[1]);
    CHECK(a.half_estimates[1] == b.half_estimates[0]);
    CHECK(a.lambda_hat == b.lambda_hat);
}

TEST_CASE("K = 1 reduces to Warp-II with the fitted location and scale") {
    const auto target = make_target(preset("skewed_unimodal_1d"));
    const auto draws = target.sample(600, 8);
    PipelineConfig cfg;
    cfg.components = 1;
    cfg.seed = 23;
    const auto rep = estimate_lambda_warpu(target, draws, cfg);

    const auto fit_half = draws.slice(0, 300), bridge_half = draws.slice(300, 300);
    const auto& mix = rep.mixtures[0];
    const WarpSpec warp2 = ScaleWarp{{mix.mean(0)[0]}, {mix.scale(0)[0]}};
    const std::uint64_t oseed = orientation_seed(cfg.seed, fit_half);
    const auto warped = warp_samples(warp2, bridge_half, derive_seed(oseed, stream::warp_rows));
    const auto z = reference_draws(1, 300, derive_seed(oseed, stream::reference_draws));
    const auto res = bridge_optimal(warped_bridge_input(warped_target(warp2, target), warped.points, z));
    CHECK(res.lambda_hat == doctest::Approx(rep.half_estimates[0]).epsilon(1e-12));
}

TEST_CASE("odd sample size drops one draw with a warning") {
    const auto target = make_target(preset("standard_normal_1d"));
    const auto draws = target.sample(401, 2);
    PipelineConfig cfg;
    const auto odd = estimate_lambda_warpu(target, draws, cfg);
    CHECK(has_warning(odd, "odd sample size 401"));
    const auto even = estimate_lambda_warpu(target, draws.slice(0, 400), cfg);
    CHECK(odd.lambda_hat == even.lambda_hat);
}

TEST_CASE("input errors") {
    const auto target = make_target(preset("standard_normal_1d"));
    const auto t2 = make_target(preset("trimodal_skewed_2d"));
    PipelineConfig cfg;
    CHECK_THROWS_AS(estimate_lambda_warpu(target, t2.sample(100, 1), cfg), Error);
    CHECK_THROWS_AS(estimate_lambda_mix(target, target.sample(1, 1), cfg), Error);
    CHECK_THROWS_AS(adaptive_bias_demo(target, 200, 1, 1, 3), Error);
    const TargetDensity no_constant(1, [](std::span<const double> x) { return -x[0] * x[0]; });
    CHECK_THROWS_AS(adaptive_bias_demo(no_constant, 200, 1, 5, 3), Error);
    CHECK_THROWS_AS(moment_warp(4, target.sample(10, 1)), Error);
}

TEST_CASE("direct ratio on identical data is exactly zero") {
    const auto target = make_target(preset("trimodal_skewed_1d"));
    const auto draws = target.sample(600, 4);
    PipelineConfig cfg;
    cfg.components = 3;
    cfg.seed = 2;
    const auto r = estimate_ratio(target, draws, target, draws, cfg, RatioProcedure::UDirect);
    CHECK(r.lambda_hat == 0.0);
    CHECK(r.variance_hat == 0.0);
    CHECK(r.mixtures.size() == 4);

    const auto other = target.sample(600, 5);
    for (auto proc : {RatioProcedure::UDiff, RatioProcedure::MixDiff, RatioProcedure::UDirect}) {
        const auto e = estimate_ratio(target, draws, target, other, cfg, proc);
        CHECK(std::abs(e.lambda_hat) < 5.0 * std::sqrt(e.variance_hat));
    }
}

TEST_CASE("difference procedures add variances and subtract estimates") {
    const auto t1 = make_target(preset("trimodal_skewed_1d"));
    const auto t2 = make_target(preset("trimodal_skewed_1d_b"));
    const auto d1 = t1.sample(800, 1), d2 = t2.sample(800, 2);
    PipelineConfig cfg;
    cfg.components = 3;
    const auto a = estimate_lambda_warpu(t1, d1, cfg), b = estimate_lambda_warpu(t2, d2, cfg);
    const auto r = estimate_ratio(t1, d1, t2, d2, cfg, RatioProcedure::UDiff);
    CHECK(r.lambda_hat == a.lambda_hat - b.lambda_hat);
    CHECK(r.variance_hat == a.variance_hat + b.variance_hat);
}

TEST_CASE("fixed warps and the moment ladder") {
    const auto target = make_target(preset("skewed_unimodal_1d"));
    const auto draws = target.sample(2000, 12);
    for (int level = 0; level <= 3; ++level) {
        const auto spec = moment_warp(level, draws);
        const auto r = estimate_lambda_fixed_warp(target, draws, spec, 2000, 99);
        CHECK(r.converged);
        CHECK(r.variance_hat > 0.0);
        CHECK(std::abs(r.lambda_hat - 0.0) < 5.0 * std::sqrt(r.variance_hat));
    }
    CHECK(std::holds_alternative<ShiftWarp>(moment_warp(1, draws)));
    CHECK(std::holds_alternative<SymmetrizeWarp>(moment_warp(3, draws)));
}

TEST_CASE("matched mixture family: Warp-U recovers log c within 3 sqrt(nu) in at least 99% of 300 runs") {
    const auto target = matched_target();
    PipelineConfig cfg;
    cfg.components = 2;
    int covered = 0;
    const int reps = 300;
    std::vector<double> est;
    double mean_nu = 0.0;
    for (int r = 0; r < reps; ++r) {
        cfg.seed = derive_seed(1234, stream::replication, static_cast<std::uint64_t>(r));
        const auto draws = target.sample(4000, derive_seed(cfg.seed, stream::target_draws));
        const auto rep = estimate_lambda_warpu(target, draws, cfg);
        covered += std::abs(rep.lambda_hat - 2.0) < 3.0 * std::sqrt(rep.variance_hat);
        est.push_back(rep.lambda_hat);
        mean_nu += rep.variance_hat / reps;
    }
    // With S = 5 the variance estimate carries about 8 degrees of freedom, so
    // the nominal rate is P(|t_8| < 3) ~ 0.983 even when mean(nu) matches Var.
    MESSAGE("coverage " << covered << "/" << reps << ", mean nu / empirical var = " << mean_nu / variance(est));
    CHECK(covered >= 297);
}

TEST_CASE("Warp-U variance does not exceed the mixture bridge's on a multimodal target") {
    const auto target = make_target(preset("trimodal_skewed_1d"));
    PipelineConfig cfg;
    cfg.components = 3;
    std::vector<double> u, mix, mix16;
    for (int r = 0; r < 300; ++r) {
        cfg.seed = derive_seed(77, stream::replication, static_cast<std::uint64_t>(r));
        const auto draws = target.sample(1000, derive_seed(cfg.seed, stream::target_draws));
        u.push_back(estimate_lambda_warpu(target, draws, cfg).lambda_hat);
        cfg.reference_size.reset();
        mix.push_back(estimate_lambda_mix(target, draws, cfg).lambda_hat);
        if (r < 200) {
            cfg.reference_size = 16000;
            mix16.push_back(estimate_lambda_mix(target, draws, cfg).lambda_hat);
            cfg.reference_size.reset();
        }
    }
    const std::vector<double> mix200(mix.begin(), mix.begin() + 200);
    MESSAGE("var U " << variance(u) << ", var mix " << variance(mix) << ", var mix m=16n " << variance(mix16));
    CHECK(variance(u) <= 1.1 * variance(mix));
    CHECK(variance(mix16) < variance(mix200));
}

TEST_CASE("adaptive bias: leaky and split agree for K = 1 on a unimodal target") {
    const auto target = make_target(preset("standard_normal_1d"));
    const auto rep = adaptive_bias_demo(target, 500, 1, 100, 8);
    CHECK(rep.leaky_estimates.size() == 100);
    const double se = rep.split.sd / std::sqrt(100.0);
    CHECK(std::abs(rep.leaky.bias) < 4.0 * se);
    CHECK(std::abs(rep.split.bias) < 4.0 * se);
}

TEST_CASE("summarize") {
    const std::vector<double> v{1.0, 2.0, 3.0, 6.0};
    const auto s = summarize(v, 2.0);
    CHECK(s.bias == doctest::Approx(1.0));
    CHECK(s.sd == doctest::Approx(std::sqrt(3.5)));
    CHECK(s.rmse * s.rmse == doctest::Approx(s.bias * s.bias + s.sd * s.sd));
    CHECK_THROWS_AS(summarize(std::vector<double>{1.0}, 0.0), Error);
}
