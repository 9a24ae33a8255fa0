#include "warpbridge/sample_set.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "warpbridge/error.hpp"

namespace warpbridge {

SampleSet::SampleSet(std::size_t dim, std::vector<double> values, std::uint64_t seed, std::string source_label)
    : dim_(dim), values_(std::move(values)), seed_(seed), label_(std::move(source_label)) {
    require(dim_ >= 1, "SampleSet: dimension must be at least 1");
    require(values_.size() % dim_ == 0, "SampleSet: value count is not a multiple of the dimension");
    for (double v : values_)
        if (!std::isfinite(v)) fail(ErrorCode::Numeric, "SampleSet: non-finite entry");
}

SampleSet SampleSet::slice(std::size_t first, std::size_t count) const {
    require(first + count <= size(), "SampleSet::slice: range out of bounds");
    std::vector<double> v(values_.begin() + static_cast<std::ptrdiff_t>(first * dim_),
                          values_.begin() + static_cast<std::ptrdiff_t>((first + count) * dim_));
    return SampleSet(dim_, std::move(v), seed_, label_);
}

SampleSet SampleSet::gather(std::span<const std::size_t> indices) const {
    std::vector<double> v;
    v.reserve(indices.size() * dim_);
    for (std::size_t i : indices) {
        require(i < size(), "SampleSet::gather: index out of bounds");
        auto r = row(i);
        v.insert(v.end(), r.begin(), r.end());
    }
    return SampleSet(dim_, std::move(v), seed_, label_);
}

std::vector<double> SampleSet::column(std::size_t d) const {
    std::vector<double> c(size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = (*this)(i, d);
    return c;
}

std::string format_double(double v) {
    if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

namespace {

void write_header(std::ostream& out, std::size_t dim) {
    for (std::size_t d = 0; d < dim; ++d) out << (d ? "," : "") << 'd' << d;
}

double parse_double(std::string_view s, std::size_t line) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        fail(ErrorCode::Io, "sample file line " + std::to_string(line) + ": cannot parse '" + std::string(s) + "'");
    return v;
}

} // namespace

void write_csv(std::ostream& out, const SampleSet& samples) {
    write_header(out, samples.dim());
    out << '\n';
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t d = 0; d < samples.dim(); ++d) out << (d ? "," : "") << format_double(samples(i, d));
        out << '\n';
    }
}

void write_csv(const std::string& path, const SampleSet& samples) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
    write_csv(out, samples);
}

void write_csv_with_column(std::ostream& out, const SampleSet& samples, std::span<const int> extra,
                           const std::string& extra_name) {
    require(extra.size() == samples.size(), "write_csv_with_column: column length mismatch");
    write_header(out, samples.dim());
    out << ',' << extra_name << '\n';
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t d = 0; d < samples.dim(); ++d) out << (d ? "," : "") << format_double(samples(i, d));
        out << ',' << extra[i] << '\n';
    }
}

SampleSet read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::Io, "sample file is empty");
    std::size_t dim = 0;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            if (cell != "d" + std::to_string(dim))
                fail(ErrorCode::Io, "sample file header must be d0,...,d{dim-1}; got '" + line + "'");
            ++dim;
        }
    }
    if (dim == 0) fail(ErrorCode::Io, "sample file header is empty");
    std::vector<double> values;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::size_t fields = 0, start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            const auto end = comma == std::string::npos ? line.size() : comma;
            values.push_back(parse_double(std::string_view(line).substr(start, end - start), lineno));
            ++fields;
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields != dim)
            fail(ErrorCode::Io, "sample file line " + std::to_string(lineno) + ": expected " + std::to_string(dim) +
                                    " fields, got " + std::to_string(fields));
    }
    if (values.empty()) fail(ErrorCode::Io, "sample file has no rows");
    return SampleSet(dim, std::move(values), 0, "file");
}

SampleSet read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open '" + path + "'");
    auto s = read_csv(in);
    s.set_provenance(0, path);
    return s;
}

} // namespace warpbridge
