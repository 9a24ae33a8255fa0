#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace warpbridge {

/// n draws in R^dim, stored row-major, with the seed and label that produced them.
class SampleSet {
public:
    SampleSet() = default;
    SampleSet(std::size_t dim, std::vector<double> values, std::uint64_t seed = 0,
              std::string source_label = {});

    std::size_t size() const noexcept { return dim_ == 0 ? 0 : values_.size() / dim_; }
    std::size_t dim() const noexcept { return dim_; }
    bool empty() const noexcept { return values_.empty(); }

    std::span<const double> row(std::size_t i) const noexcept { return {values_.data() + i * dim_, dim_}; }
    std::span<double> row(std::size_t i) noexcept { return {values_.data() + i * dim_, dim_}; }
    double operator()(std::size_t i, std::size_t d) const noexcept { return values_[i * dim_ + d]; }

    std::span<const double> values() const noexcept { return values_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::string& source_label() const noexcept { return label_; }
    void set_provenance(std::uint64_t seed, std::string label) {
        seed_ = seed;
        label_ = std::move(label);
    }

    /// Rows [first, first + count).
    SampleSet slice(std::size_t first, std::size_t count) const;
    /// Rows listed in `indices`, in that order.
    SampleSet gather(std::span<const std::size_t> indices) const;
    std::vector<double> column(std::size_t d) const;

private:
    std::size_t dim_ = 0;
    std::vector<double> values_;
    std::uint64_t seed_ = 0;
    std::string label_;
};

// Delimited text: header `d0,...,d{dim-1}` then one row per draw. Values are
// written with 17 significant digits so a write/read cycle is exact.
void write_csv(std::ostream& out, const SampleSet& samples);
void write_csv(const std::string& path, const SampleSet& samples);
SampleSet read_csv(std::istream& in);
SampleSet read_csv(const std::string& path);

/// Writes the samples with one extra integer column (header `extra_name`).
void write_csv_with_column(std::ostream& out, const SampleSet& samples, std::span<const int> extra,
                           const std::string& extra_name);

std::string format_double(double v);

} // namespace warpbridge
