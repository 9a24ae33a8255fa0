#include "warpbridge/target_density.hpp"

#include <cmath>

#include "warpbridge/error.hpp"

namespace warpbridge {

Box Box::hull(const Box& other) const {
    require_dim(other.dim(), dim(), "Box::hull");
    Box out = *this;
    for (std::size_t d = 0; d < dim(); ++d) {
        out.lo[d] = std::min(lo[d], other.lo[d]);
        out.hi[d] = std::max(hi[d], other.hi[d]);
    }
    return out;
}

TargetDensity::TargetDensity(std::size_t dim, PointFn log_q, std::optional<double> true_log_c, std::string label)
    : dim_(dim), point_(std::move(log_q)), true_log_c_(true_log_c), label_(std::move(label)) {
    require(dim_ >= 1, "TargetDensity: dimension must be at least 1");
    require(static_cast<bool>(point_), "TargetDensity: evaluator is empty");
}

TargetDensity TargetDensity::from_batch(std::size_t dim, BatchFn log_q_batch, std::string label) {
    require(dim >= 1, "TargetDensity: dimension must be at least 1");
    require(static_cast<bool>(log_q_batch), "TargetDensity: evaluator is empty");
    TargetDensity t;
    t.dim_ = dim;
    t.batch_ = std::move(log_q_batch);
    t.label_ = std::move(label);
    return t;
}

namespace {
double checked(double v) {
    if (std::isnan(v)) fail(ErrorCode::Numeric, "target log density returned NaN");
    if (v == std::numeric_limits<double>::infinity()) fail(ErrorCode::Numeric, "target log density returned +inf");
    return v;
}
} // namespace

double TargetDensity::log_q(std::span<const double> x) const {
    require_dim(x.size(), dim_, "TargetDensity::log_q");
    if (point_) return checked(point_(x));
    double out = 0.0;
    batch_(x, std::span<double>(&out, 1));
    return checked(out);
}

void TargetDensity::log_q_batch(std::span<const double> rows, std::span<double> out) const {
    require(rows.size() == out.size() * dim_, "TargetDensity::log_q_batch: buffer size mismatch");
    if (batch_) {
        if (!out.empty()) batch_(rows, out);
    } else {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = point_(rows.subspan(i * dim_, dim_));
    }
    for (double v : out) checked(v);
}

std::vector<double> TargetDensity::log_q_batch(const SampleSet& points) const {
    require_dim(points.dim(), dim_, "TargetDensity::log_q_batch");
    std::vector<double> out(points.size());
    log_q_batch(points.values(), out);
    return out;
}

TargetDensity& TargetDensity::with_sampler(Sampler sampler) {
    sampler_ = std::move(sampler);
    return *this;
}

TargetDensity& TargetDensity::with_box(Box box) {
    require_dim(box.dim(), dim_, "TargetDensity::with_box");
    box_ = std::move(box);
    return *this;
}

TargetDensity& TargetDensity::with_true_log_c(double log_c) {
    true_log_c_ = log_c;
    return *this;
}

SampleSet TargetDensity::sample(std::size_t n, std::uint64_t seed) const {
    if (!sampler_) fail(ErrorCode::InvalidArgument, "target '" + label_ + "' has no direct sampler");
    require(n >= 1, "TargetDensity::sample: n must be at least 1");
    Rng rng = make_rng(seed);
    std::vector<double> v(n * dim_);
    for (std::size_t i = 0; i < n; ++i) sampler_(rng, std::span<double>(v.data() + i * dim_, dim_));
    return SampleSet(dim_, std::move(v), seed, label_);
}

} // namespace warpbridge
