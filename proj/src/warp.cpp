#include "warpbridge/warp.hpp"

#include <cmath>

#include "warpbridge/error.hpp"
#include "warpbridge/numeric.hpp"
#include "warpbridge/parallel.hpp"

namespace warpbridge {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

namespace {

void check_scale(const std::vector<double>& mu, const std::vector<double>& scale) {
    require(!mu.empty(), "warp: empty location");
    require(mu.size() == scale.size(), "warp: location and scale lengths differ");
    for (double s : scale) require(std::isfinite(s) && s > 0.0, "warp: scale entries must be strictly positive");
}

double log_det(const std::vector<double>& scale) {
    double acc = 0.0;
    for (double s : scale) acc += std::log(s);
    return acc;
}

} // namespace

void validate(const WarpSpec& spec) {
    std::visit(overloaded{[](const ShiftWarp& w) { require(!w.mu.empty(), "warp: empty location"); },
                          [](const ScaleWarp& w) { check_scale(w.mu, w.scale); },
                          [](const SymmetrizeWarp& w) { check_scale(w.mu, w.scale); },
                          [](const MixtureWarp&) {}},
               spec);
}

std::size_t warp_dim(const WarpSpec& spec) {
    return std::visit(overloaded{[](const ShiftWarp& w) { return w.mu.size(); },
                                 [](const ScaleWarp& w) { return w.mu.size(); },
                                 [](const SymmetrizeWarp& w) { return w.mu.size(); },
                                 [](const MixtureWarp& w) { return w.mixture.dim(); }},
                      spec);
}

bool warp_is_stochastic(const WarpSpec& spec) {
    return std::holds_alternative<SymmetrizeWarp>(spec) || std::holds_alternative<MixtureWarp>(spec);
}

WarpedSample warp_forward_with_uniform(const WarpSpec& spec, std::span<const double> w, double u) {
    validate(spec);
    require_dim(w.size(), warp_dim(spec), "warp_forward");
    WarpedSample out;
    out.source.assign(w.begin(), w.end());
    out.point.resize(w.size());
    std::visit(overloaded{
                   [&](const ShiftWarp& s) {
                       for (std::size_t d = 0; d < w.size(); ++d) out.point[d] = w[d] - s.mu[d];
                   },
                   [&](const ScaleWarp& s) {
                       for (std::size_t d = 0; d < w.size(); ++d) out.point[d] = (w[d] - s.mu[d]) / s.scale[d];
                   },
                   [&](const SymmetrizeWarp& s) {
                       out.sign = u < 0.5 ? 1 : -1;
                       for (std::size_t d = 0; d < w.size(); ++d)
                           out.point[d] = out.sign * (w[d] - s.mu[d]) / s.scale[d];
                   },
                   [&](const MixtureWarp& s) {
                       const auto resp = s.mixture.responsibility(w);
                       const std::size_t k = draw_index_from_probabilities(resp, u);
                       out.psi = k;
                       const auto mu = s.mixture.mean(k);
                       const auto sc = s.mixture.scale(k);
                       for (std::size_t d = 0; d < w.size(); ++d) out.point[d] = (w[d] - mu[d]) / sc[d];
                   }},
               spec);
    return out;
}

WarpedSample warp_forward(const WarpSpec& spec, std::span<const double> w, Rng* rng) {
    double u = 0.5;
    if (warp_is_stochastic(spec)) {
        require(rng != nullptr, "warp_forward: a random stream is required for Warp-III and Warp-U");
        u = uniform01(*rng);
    }
    return warp_forward_with_uniform(spec, w, u);
}

WarpedSet warp_samples(const WarpSpec& spec, const SampleSet& samples, std::uint64_t seed, std::size_t threads) {
    validate(spec);
    require_dim(samples.dim(), warp_dim(spec), "warp_samples");
    const std::size_t n = samples.size(), D = samples.dim();
    std::vector<double> values(n * D);
    std::vector<int> labels(warp_is_stochastic(spec) ? n : 0);
    parallel_for(n, threads, [&](std::size_t i) {
        const double u = unit_from_bits(derive_seed(seed, stream::warp_rows, i));
        const auto ws = warp_forward_with_uniform(spec, samples.row(i), u);
        std::copy(ws.point.begin(), ws.point.end(), values.begin() + static_cast<std::ptrdiff_t>(i * D));
        if (ws.psi) labels[i] = static_cast<int>(*ws.psi);
        else if (!labels.empty()) labels[i] = ws.sign;
    });
    return {SampleSet(D, std::move(values), seed, samples.source_label() + "|warped"), std::move(labels)};
}

std::vector<double> warp_inverse(const GaussianMixture& mix, std::span<const double> w_tilde, std::size_t psi) {
    require(psi < mix.components(), "warp_inverse: component index " + std::to_string(psi) + " out of range");
    require_dim(w_tilde.size(), mix.dim(), "warp_inverse");
    std::vector<double> w(w_tilde.size());
    const auto mu = mix.mean(psi);
    const auto sc = mix.scale(psi);
    for (std::size_t d = 0; d < w.size(); ++d) w[d] = sc[d] * w_tilde[d] + mu[d];
    return w;
}

std::vector<double> warped_log_density(const WarpSpec& spec, const TargetDensity& target, const SampleSet& points) {
    validate(spec);
    const std::size_t D = warp_dim(spec);
    require_dim(target.dim(), D, "warped_log_density (target)");
    require_dim(points.dim(), D, "warped_log_density (points)");
    const std::size_t n = points.size();
    std::vector<double> out(n);

    // Evaluate q at the preimages of every point, in one batch.
    auto eval = [&](std::size_t copies, auto&& preimage) {
        std::vector<double> rows(n * copies * D);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < copies; ++c)
                preimage(points.row(i), c, std::span<double>(rows.data() + (i * copies + c) * D, D));
        std::vector<double> lq(n * copies);
        target.log_q_batch(rows, lq);
        return std::pair{std::move(rows), std::move(lq)};
    };

    std::visit(
        overloaded{
            [&](const ShiftWarp& s) {
                auto [rows, lq] = eval(1, [&](auto x, std::size_t, std::span<double> r) {
                    for (std::size_t d = 0; d < D; ++d) r[d] = x[d] + s.mu[d];
                });
                out = std::move(lq);
            },
            [&](const ScaleWarp& s) {
                const double ld = log_det(s.scale);
                auto [rows, lq] = eval(1, [&](auto x, std::size_t, std::span<double> r) {
                    for (std::size_t d = 0; d < D; ++d) r[d] = s.scale[d] * x[d] + s.mu[d];
                });
                for (std::size_t i = 0; i < n; ++i) out[i] = lq[i] == kNegInf ? kNegInf : ld + lq[i];
            },
            [&](const SymmetrizeWarp& s) {
                const double ld = log_det(s.scale);
                auto [rows, lq] = eval(2, [&](auto x, std::size_t c, std::span<double> r) {
                    const double sign = c == 0 ? -1.0 : 1.0;
                    for (std::size_t d = 0; d < D; ++d) r[d] = s.mu[d] + sign * s.scale[d] * x[d];
                });
                for (std::size_t i = 0; i < n; ++i) {
                    const double both = log_add_exp(lq[2 * i], lq[2 * i + 1]);
                    out[i] = both == kNegInf ? kNegInf : ld + both - std::log(2.0);
                }
            },
            [&](const MixtureWarp& s) {
                const auto& mix = s.mixture;
                const std::size_t K = mix.components();
                auto [rows, lq] = eval(K, [&](auto x, std::size_t k, std::span<double> r) {
                    const auto mu = mix.mean(k);
                    const auto sc = mix.scale(k);
                    for (std::size_t d = 0; d < D; ++d) r[d] = sc[d] * x[d] + mu[d];
                });
                std::vector<double> terms(K), comp(K);
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t k = 0; k < K; ++k) {
                        const double lqk = lq[i * K + k];
                        if (lqk == kNegInf) {
                            terms[k] = kNegInf;
                            continue;
                        }
                        mix.component_log_densities(std::span<const double>(rows.data() + (i * K + k) * D, D), comp);
                        terms[k] = std::log(mix.weight(k)) + lqk - log_sum_exp(comp);
                    }
                    const double lse = log_sum_exp(terms);
                    out[i] = lse == kNegInf ? kNegInf : std_normal_logpdf(points.row(i)) + lse;
                }
            }},
        spec);
    return out;
}

double warped_log_density(const WarpSpec& spec, const TargetDensity& target, std::span<const double> w_tilde) {
    for (double v : w_tilde)
        if (!std::isfinite(v)) fail(ErrorCode::Numeric, "warped_log_density: non-finite point");
    SampleSet one(w_tilde.size(), std::vector<double>(w_tilde.begin(), w_tilde.end()));
    return warped_log_density(spec, target, one)[0];
}

Box warped_box(const WarpSpec& spec, const Box& box) {
    validate(spec);
    require_dim(box.dim(), warp_dim(spec), "warped_box");
    const std::size_t D = box.dim();
    Box out{std::vector<double>(D), std::vector<double>(D)};
    std::visit(overloaded{
                   [&](const ShiftWarp& s) {
                       for (std::size_t d = 0; d < D; ++d) {
                           out.lo[d] = box.lo[d] - s.mu[d];
                           out.hi[d] = box.hi[d] - s.mu[d];
                       }
                   },
                   [&](const ScaleWarp& s) {
                       for (std::size_t d = 0; d < D; ++d) {
                           out.lo[d] = (box.lo[d] - s.mu[d]) / s.scale[d];
                           out.hi[d] = (box.hi[d] - s.mu[d]) / s.scale[d];
                       }
                   },
                   [&](const SymmetrizeWarp& s) {
                       for (std::size_t d = 0; d < D; ++d) {
                           const double a = std::max(std::abs(box.lo[d] - s.mu[d]), std::abs(box.hi[d] - s.mu[d]));
                           out.lo[d] = -a / s.scale[d];
                           out.hi[d] = a / s.scale[d];
                       }
                   },
                   [&](const MixtureWarp& s) {
                       const auto& mix = s.mixture;
                       for (std::size_t d = 0; d < D; ++d) {
                           out.lo[d] = std::numeric_limits<double>::infinity();
                           out.hi[d] = -std::numeric_limits<double>::infinity();
                           for (std::size_t k = 0; k < mix.components(); ++k) {
                               out.lo[d] = std::min(out.lo[d], (box.lo[d] - mix.mean(k)[d]) / mix.scale(k)[d]);
                               out.hi[d] = std::max(out.hi[d], (box.hi[d] - mix.mean(k)[d]) / mix.scale(k)[d]);
                           }
                       }
                   }},
               spec);
    return out;
}

TargetDensity warped_target(const WarpSpec& spec, const TargetDensity& target) {
    validate(spec);
    require_dim(target.dim(), warp_dim(spec), "warped_target");
    const std::size_t D = target.dim();
    auto t = TargetDensity::from_batch(
        D,
        [spec, target, D](std::span<const double> rows, std::span<double> out) {
            SampleSet pts(D, std::vector<double>(rows.begin(), rows.end()));
            auto v = warped_log_density(spec, target, pts);
            std::copy(v.begin(), v.end(), out.begin());
        },
        target.label() + "|warped");
    if (target.true_log_c()) t.with_true_log_c(*target.true_log_c());
    if (target.box()) t.with_box(warped_box(spec, *target.box()));
    if (target.has_sampler()) {
        t.with_sampler([spec, base = target.sampler(), D](Rng& rng, std::span<double> out) {
            std::vector<double> w(D);
            base(rng, w);
            const auto ws = warp_forward(spec, w, &rng);
            std::copy(ws.point.begin(), ws.point.end(), out.begin());
        });
    }
    return t;
}

} // namespace warpbridge
