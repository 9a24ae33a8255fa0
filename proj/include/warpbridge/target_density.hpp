#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "warpbridge/rng.hpp"
#include "warpbridge/sample_set.hpp"

namespace warpbridge {

/// Axis-aligned box used as the quadrature domain of a density.
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    std::size_t dim() const noexcept { return lo.size(); }
    Box hull(const Box& other) const;
};

/// An evaluable unnormalized log density log q on R^dim. Evaluation returns
/// -inf outside the support and never NaN (a NaN from the evaluator throws).
/// Built-in targets also carry their true log normalizing constant, a
/// quadrature box and a direct i.i.d. sampler.
class TargetDensity {
public:
    using PointFn = std::function<double(std::span<const double>)>;
    /// Evaluate `rows.size() / dim` points stored row-major into `out`.
    using BatchFn = std::function<void(std::span<const double> rows, std::span<double> out)>;
    using Sampler = std::function<void(Rng&, std::span<double>)>;

    TargetDensity(std::size_t dim, PointFn log_q, std::optional<double> true_log_c = std::nullopt,
                  std::string label = "target");
    static TargetDensity from_batch(std::size_t dim, BatchFn log_q_batch, std::string label = "external");

    std::size_t dim() const noexcept { return dim_; }
    const std::string& label() const noexcept { return label_; }
    std::optional<double> true_log_c() const noexcept { return true_log_c_; }

    double log_q(std::span<const double> x) const;
    void log_q_batch(std::span<const double> rows, std::span<double> out) const;
    std::vector<double> log_q_batch(const SampleSet& points) const;

    TargetDensity& with_sampler(Sampler sampler);
    TargetDensity& with_box(Box box);
    TargetDensity& with_true_log_c(double log_c);

    bool has_sampler() const noexcept { return static_cast<bool>(sampler_); }
    const Sampler& sampler() const noexcept { return sampler_; }
    const std::optional<Box>& box() const noexcept { return box_; }
    SampleSet sample(std::size_t n, std::uint64_t seed) const;

private:
    TargetDensity() = default;

    std::size_t dim_ = 0;
    PointFn point_;
    BatchFn batch_;
    std::optional<double> true_log_c_;
    std::string label_;
    Sampler sampler_;
    std::optional<Box> box_;
};

} // namespace warpbridge
