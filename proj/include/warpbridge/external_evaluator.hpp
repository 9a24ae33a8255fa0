#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>

#include "warpbridge/target_density.hpp"

namespace warpbridge {

struct ExternalEvaluatorOptions {
    std::string command; ///< run through /bin/sh -c
    std::size_t dim = 1;
    std::chrono::milliseconds timeout{60'000}; ///< per handshake and per batch
    std::size_t batch_size = 4096;             ///< rows per EVAL request
};

/// A child process serving log q over a line protocol on its standard streams:
///
///   -> HELLO dim=<d>                 <- READY
///   -> EVAL <id> <count>             <- OK <id>
///   -> <count> rows of coordinates   <- <count> values (decimal or -inf)
///
/// Any violation, timeout or early exit throws Error(Protocol) quoting the
/// offending line; the evaluator is then unusable. Calls are serialized.
class ExternalEvaluator {
public:
    explicit ExternalEvaluator(ExternalEvaluatorOptions opts);
    ~ExternalEvaluator();
    ExternalEvaluator(const ExternalEvaluator&) = delete;
    ExternalEvaluator& operator=(const ExternalEvaluator&) = delete;

    std::size_t dim() const noexcept { return opts_.dim; }
    std::size_t batches_sent() const noexcept { return next_id_; }
    /// Evaluate rows.size()/dim points into `out`.
    void evaluate(std::span<const double> rows, std::span<double> out);

private:
    void evaluate_batch(std::span<const double> rows, std::span<double> out);
    void send(const std::string& text);
    std::string read_line();
    [[noreturn]] void broken(const std::string& msg);
    void shutdown() noexcept;

    ExternalEvaluatorOptions opts_;
    int pid_ = -1;
    int fd_ = -1; ///< socket connected to the child's stdin and stdout
    std::string buffer_;
    std::uint64_t next_id_ = 0;
    bool failed_ = false;
    std::mutex mutex_;
};

/// A TargetDensity whose log q is served by `evaluator` in batches.
TargetDensity external_target(std::shared_ptr<ExternalEvaluator> evaluator, std::string label = "external");

} // namespace warpbridge
