#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "warpbridge/divergence.hpp"
#include "warpbridge/em.hpp"
#include "warpbridge/error.hpp"
#include "warpbridge/mcmc.hpp"
#include "warpbridge/numeric.hpp"
#include "warpbridge/stats.hpp"
#include "warpbridge/targets.hpp"

using namespace warpbridge;

namespace {

GaussianMixture two_component() { return GaussianMixture({0.3, 0.7}, {-2.0, 1.5}, {0.8, 1.1}, 1); }

// Target is a different two-component mixture than the sampler's, so the chain is not i.i.d.
GaussianMixtureTarget mismatched_target_spec() {
    GaussianMixtureTarget spec;
    spec.mixture = GaussianMixture({0.4, 0.6}, {-2.5, 1.0}, {0.6, 1.4}, 1);
    spec.log_c = 0.7;
    return spec;
}

double mixture_cdf(const GaussianMixture& m, double x) {
    double c = 0.0;
    for (std::size_t k = 0; k < m.components(); ++k)
        c += m.weight(k) * std_normal_cdf((x - m.mean(k)[0]) / m.scale(k)[0]);
    return c;
}

} // namespace

TEST_CASE("psi* weights equal pi when q is a multiple of the mixture") {
    GaussianMixtureTarget spec;
    spec.mixture = GaussianMixture({0.2, 0.5, 0.3}, {-1.0, 0.0, 2.0, 1.0, 3.0, -2.0}, {1.0, 0.5, 2.0, 1.5, 0.7, 0.9}, 2);
    spec.log_c = 3.2;
    const auto target = make_target(spec);
    Rng rng = make_rng(1);
    std::normal_distribution<double> z;
    for (int i = 0; i < 100; ++i) {
        const std::vector<double> wt{z(rng), z(rng)};
        const auto w = psi_star_weights(spec.mixture, target, wt);
        for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(w[k] - spec.mixture.weight(k)) <= 1e-12);
    }
}

TEST_CASE("psi* weights match the unsimplified conditional") {
    // p(psi = k | w~) proportional to varpi(k | H_k w~) p(H_k w~) |S_k|,
    // varpi(k | x) = pi_k N(x; mu_k, S_k) / phi_mix(x).
    const auto mix = two_component();
    auto q = [](double x) { return std::exp(-0.25 * x * x * x * x + x); };
    const TargetDensity target(1, [](std::span<const double> x) { return -0.25 * std::pow(x[0], 4) + x[0]; });
    auto normal_pdf = [](double x, double mu, double s) {
        const double u = (x - mu) / s;
        return std::exp(-0.5 * u * u) / (s * std::sqrt(2.0 * 3.141592653589793238));
    };
    for (double wt = -3.0; wt <= 3.0; wt += 0.25) {
        double un[2], total = 0.0;
        for (std::size_t k = 0; k < 2; ++k) {
            const double mu = mix.mean(k)[0], s = mix.scale(k)[0];
            const double x = s * wt + mu;
            const double phi_mix = 0.3 * normal_pdf(x, -2.0, 0.8) + 0.7 * normal_pdf(x, 1.5, 1.1);
            const double varpi = mix.weight(k) * normal_pdf(x, mu, s) / phi_mix;
            un[k] = varpi * q(x) * s;
            total += un[k];
        }
        const auto w = psi_star_weights(mix, target, std::vector<double>{wt});
        CHECK(std::abs(w[0] - un[0] / total) <= 1e-12);
        CHECK(std::abs(w[1] - un[1] / total) <= 1e-12);
        CHECK(std::abs(w[0] + w[1] - 1.0) <= 1e-12);
    }
}

TEST_CASE("psi* weights sum to one and report escapes") {
    const auto target = make_target(preset("trimodal_skewed_1d"));
    const auto mix = GaussianMixture({0.2, 0.3, 0.1, 0.4}, {-6.0, -1.0, 2.0, 7.0}, {1.0, 2.0, 0.5, 3.0}, 1);
    Rng rng = make_rng(3);
    std::normal_distribution<double> z;
    for (int i = 0; i < 500; ++i) {
        const auto w = psi_star_weights(mix, target, std::vector<double>{3.0 * z(rng)});
        double s = 0.0;
        for (double v : w) s += v;
        CHECK(std::abs(s - 1.0) <= 1e-12);
    }
    const TargetDensity boxed(1, [](std::span<const double> x) { return std::abs(x[0]) < 1.0 ? 0.0 : kNegInf; });
    try {
        (void)psi_star_weights(GaussianMixture({0.5, 0.5}, {5.0, 8.0}, {1.0, 1.0}, 1), boxed,
                               std::vector<double>{0.0});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("chain escaped support") != std::string::npos);
    }
}

TEST_CASE("K = 1 chain is the identity") {
    const auto target = make_target(preset("trimodal_gaussian_1d"));
    const auto mix = GaussianMixture({1.0}, {0.3}, {2.0}, 1);
    const std::vector<double> w0{1.2345};
    ChainOptions opts;
    opts.steps = 200;
    const auto res = run_chain(w0, opts, mix, target, 9);
    CHECK(res.samples.size() == 200);
    for (std::size_t i = 0; i < res.samples.size(); ++i) CHECK(res.samples(i, 0) == w0[0]);
    CHECK(res.diagnostics.unique_points == 1);
    CHECK(psi_star_weights(mix, target, std::vector<double>{0.5}) == std::vector<double>{1.0});
}

TEST_CASE("psi* equal to psi leaves the point unchanged") {
    const auto target = make_target(preset("trimodal_gaussian_1d"));
    const auto mix = GaussianMixture({0.3, 0.4, 0.3}, {-4.0, 0.0, 5.0}, {1.0, 1.5, 0.8}, 1);
    Rng rng = make_rng(12);
    ChainState s;
    s.w = {0.1};
    int same = 0, moved = 0;
    for (int i = 0; i < 5000; ++i) {
        const auto next = chain_step(s, mix, target, rng);
        CHECK(next.t == s.t + 1);
        if (next.last_psi == next.last_psi_star) {
            ++same;
            CHECK(next.w == s.w);
        } else {
            ++moved;
        }
        s = next;
    }
    CHECK(same > 0);
    CHECK(moved > 0);
}

TEST_CASE("single step and storage cap") {
    const auto spec = mismatched_target_spec();
    const auto target = make_target(spec);
    ChainOptions one;
    one.steps = 1;
    const auto r1 = run_chain(std::vector<double>{0.0}, one, two_component(), target, 4);
    CHECK(r1.samples.size() == 1);
    CHECK(r1.diagnostics.steps == 1);
    REQUIRE(r1.diagnostics.acf.size() == 2);
    CHECK(r1.diagnostics.acf[0][0] == 1.0);

    ChainOptions capped;
    capped.steps = 1000;
    capped.max_stored = 100;
    const auto rc = run_chain(std::vector<double>{0.0}, capped, two_component(), target, 4);
    CHECK(rc.samples.size() <= 100);
    CHECK(rc.samples.size() >= 50);
    CHECK(rc.diagnostics.thin >= 8);
    // The capped path is a thinned copy of the full one.
    ChainOptions full;
    full.steps = 1000;
    const auto rf = run_chain(std::vector<double>{0.0}, full, two_component(), target, 4);
    const std::size_t thin = rc.diagnostics.thin;
    for (std::size_t i = 0; i < rc.samples.size(); ++i)
        CHECK(rc.samples(i, 0) == rf.samples((i + 1) * thin - 1, 0));
    CHECK(rc.final_state.w == rf.final_state.w);
    CHECK(rc.diagnostics.unique_points == rf.diagnostics.unique_points);
}

TEST_CASE("phi_mix = p: w' has law p and correlates with w only through the shared w~") {
    // psi* is independent of (psi, w~), but w' = S_psi* w~ + mu_psi* reuses w~,
    // so Cov(w_d, w'_d) = (sum_k pi_k S_kd)^2 per coordinate.
    GaussianMixtureTarget spec;
    spec.mixture = GaussianMixture({0.5, 0.5}, {-3.0, 1.0, 3.0, -1.0}, {1.0, 0.5, 0.7, 2.0}, 2);
    spec.log_c = -1.0;
    const auto target = make_target(spec);
    const std::size_t n = 20000;
    const auto starts = target.sample(n, 41);
    const auto next = run_parallel_chains(starts, 1, spec.mixture, target, 6);
    const double bound = 4.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t d = 0; d < 2; ++d) {
        double es = 0.0, es2 = 0.0, em = 0.0, em2 = 0.0;
        for (std::size_t k = 0; k < 2; ++k) {
            const double pi = spec.mixture.weight(k), s = spec.mixture.scale(k)[d], m = spec.mixture.mean(k)[d];
            es += pi * s;
            es2 += pi * s * s;
            em += pi * m;
            em2 += pi * m * m;
        }
        const double predicted = es * es / (es2 + em2 - em * em);
        const double got = correlation(starts.column(d), next.column(d));
        CHECK(std::abs(got - predicted) < bound);
        const GaussianMixture marginal({0.5, 0.5}, {spec.mixture.mean(0)[d], spec.mixture.mean(1)[d]},
                                       {spec.mixture.scale(0)[d], spec.mixture.scale(1)[d]}, 1);
        const double ks = ks_statistic(next.column(d), [&](double x) { return mixture_cdf(marginal, x); });
        CHECK(ks_pvalue(ks, static_cast<double>(n)) > 0.01);
    }
}

TEST_CASE("a two-component chain from a fixed start stays on a small orbit") {
    // Every move is H_j F_i for fixed affine maps; with K = 2 these are one map and its inverse.
    const auto spec = mismatched_target_spec();
    ChainOptions opts;
    opts.steps = 10000;
    const auto res = run_chain(std::vector<double>{0.0}, opts, two_component(), make_target(spec), 5);
    CHECK(res.diagnostics.unique_points < 100);
}

TEST_CASE("long run with a rich mixture matches the target CDF after an ESS correction") {
    const auto target = make_target(preset("trimodal_gaussian_1d"));
    EMConfig em;
    em.components = 8;
    em.seed = 2;
    const auto fit = multi_start_fit(target.sample(4000, 1), em);
    ChainOptions opts;
    opts.steps = 100000;
    const auto res = run_chain(std::vector<double>{0.0}, opts, fit.mixture, target, 5);
    const auto ks = ks_test_chain(res.samples.column(0), quadrature_cdf(density_from_target(target)));
    MESSAGE("KS d = " << ks.d << ", ESS = " << ks.ess << ", p = " << ks.p_value
                      << ", unique = " << res.diagnostics.unique_points);
    CHECK(ks.ess < 100000.0);
    CHECK(ks.p_value > 0.01);
}

TEST_CASE("stationarity across parallel chains started from p") {
    const auto spec = mismatched_target_spec();
    const auto target = make_target(spec);
    const auto starts = target.sample(500, 17);
    const auto finals = run_parallel_chains(starts, 200, two_component(), target, 3);
    const double d = ks_statistic(finals.column(0), [&](double x) { return mixture_cdf(spec.mixture, x); });
    CHECK(ks_pvalue(d, 500.0) > 0.01);
    const auto narrow = run_parallel_chains(starts, 50, two_component(), target, 3, 1);
    const auto wide = run_parallel_chains(starts, 50, two_component(), target, 3, 4);
    CHECK(std::ranges::equal(narrow.values(), wide.values()));
}

TEST_CASE("one-step pairs are exchangeable") {
    const auto spec = mismatched_target_spec();
    const auto target = make_target(spec);
    const std::size_t n = 20000;
    const auto starts = target.sample(n, 31);
    const auto next = run_parallel_chains(starts, 1, two_component(), target, 8);
    // Compare g(w, w') on one half of the pairs with g(w', w) on the other.
    for (auto g : {+[](double a, double b) { return b - a; }, +[](double a, double b) { return a * b * b; }}) {
        std::vector<double> fwd, rev;
        for (std::size_t i = 0; i < n; ++i) {
            if (i % 2 == 0) fwd.push_back(g(starts(i, 0), next(i, 0)));
            else rev.push_back(g(next(i, 0), starts(i, 0)));
        }
        const double d = ks_statistic_two_sample(fwd, rev);
        CHECK(ks_pvalue(d, n / 4.0) > 0.01);
    }
}
