#include "warpbridge/gaussian_mixture.hpp"

#include <cmath>
#include <numeric>

#include "warpbridge/error.hpp"
#include "warpbridge/numeric.hpp"

namespace warpbridge {

GaussianMixture::GaussianMixture(std::vector<double> weights, std::vector<double> means,
                                 std::vector<double> scales, std::size_t dim)
    : dim_(dim), weights_(std::move(weights)), means_(std::move(means)), scales_(std::move(scales)) {
    const std::size_t K = weights_.size();
    require(dim_ >= 1, "GaussianMixture: dimension must be at least 1");
    require(K >= 1, "GaussianMixture: need at least one component");
    require(means_.size() == K * dim_, "GaussianMixture: means must be K x dim");
    require(scales_.size() == K * dim_, "GaussianMixture: scales must be K x dim");
    double total = 0.0;
    for (double w : weights_) {
        require(std::isfinite(w) && w > 0.0, "GaussianMixture: weights must be strictly positive");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12)
        fail(ErrorCode::InvalidArgument, "GaussianMixture: weights must sum to 1 (got " + format_double(total) + ")");
    for (double m : means_) require(std::isfinite(m), "GaussianMixture: means must be finite");
    for (double s : scales_)
        require(std::isfinite(s) && s > 0.0, "GaussianMixture: scales must be strictly positive");

    log_weights_.resize(K);
    log_det_.assign(K, 0.0);
    inv_scales_.resize(scales_.size());
    for (std::size_t k = 0; k < K; ++k) {
        log_weights_[k] = std::log(weights_[k]);
        for (std::size_t d = 0; d < dim_; ++d) {
            log_det_[k] += std::log(scales_[k * dim_ + d]);
            inv_scales_[k * dim_ + d] = 1.0 / scales_[k * dim_ + d];
        }
    }
}

GaussianMixture GaussianMixture::single(std::span<const double> mean, std::span<const double> scale) {
    require(mean.size() == scale.size(), "GaussianMixture::single: mean/scale length mismatch");
    return GaussianMixture({1.0}, {mean.begin(), mean.end()}, {scale.begin(), scale.end()}, mean.size());
}

void GaussianMixture::check_point(std::span<const double> x, const char* where) const {
    require_dim(x.size(), dim_, where);
    for (double v : x)
        if (!std::isfinite(v)) fail(ErrorCode::Numeric, std::string(where) + ": non-finite point");
}

void GaussianMixture::component_log_densities(std::span<const double> x, std::span<double> out) const {
    const double base = -0.5 * static_cast<double>(dim_) * kLogTwoPi;
    for (std::size_t k = 0; k < weights_.size(); ++k) {
        const double* mu = means_.data() + k * dim_;
        const double* inv = inv_scales_.data() + k * dim_;
        double ss = 0.0;
        for (std::size_t d = 0; d < dim_; ++d) {
            const double z = (x[d] - mu[d]) * inv[d];
            ss += z * z;
        }
        out[k] = log_weights_[k] + base - log_det_[k] - 0.5 * ss;
    }
}

double GaussianMixture::log_pdf(std::span<const double> x) const {
    check_point(x, "mixture_logpdf");
    std::vector<double> terms(weights_.size());
    component_log_densities(x, terms);
    return log_sum_exp(terms);
}

std::vector<double> GaussianMixture::responsibility(std::span<const double> x) const {
    check_point(x, "responsibility");
    std::vector<double> r(weights_.size());
    component_log_densities(x, r);
    const double hi = *std::max_element(r.begin(), r.end());
    double total = 0.0;
    for (double& v : r) total += (v = std::exp(v - hi));
    for (double& v : r) v /= total;
    return r;
}

std::size_t draw_index_from_probabilities(std::span<const double> probs, double u) {
    double cum = 0.0;
    for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
        cum += probs[k];
        if (u < cum) return k;
    }
    return probs.size() - 1;
}

std::size_t GaussianMixture::sample_one(Rng& rng, std::span<double> out) const {
    const std::size_t k = draw_index_from_probabilities(weights_, uniform01(rng));
    std::normal_distribution<double> normal;
    for (std::size_t d = 0; d < dim_; ++d) out[d] = means_[k * dim_ + d] + scales_[k * dim_ + d] * normal(rng);
    return k;
}

SampleSet GaussianMixture::sample(std::size_t n, Rng& rng) const {
    require(n >= 1, "mixture_sample: n must be at least 1");
    std::vector<double> v(n * dim_);
    std::normal_distribution<double> normal;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = draw_index_from_probabilities(weights_, uniform01(rng));
        for (std::size_t d = 0; d < dim_; ++d)
            v[i * dim_ + d] = means_[k * dim_ + d] + scales_[k * dim_ + d] * normal(rng);
    }
    return SampleSet(dim_, std::move(v), 0, "mixture");
}

} // namespace warpbridge
