#include "warpbridge/external_evaluator.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <sstream>

#include "warpbridge/error.hpp"
#include "warpbridge/sample_set.hpp"

namespace warpbridge {

namespace {

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    return left <= 0 ? 0 : static_cast<int>(std::min<long long>(left, 1 << 30));
}

std::string quoted(const std::string& line) {
    constexpr std::size_t kMax = 200;
    return "'" + (line.size() > kMax ? line.substr(0, kMax) + "..." : line) + "'";
}

std::string trim(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    return s.substr(i);
}

} // namespace

ExternalEvaluator::ExternalEvaluator(ExternalEvaluatorOptions opts) : opts_(std::move(opts)) {
    require(!opts_.command.empty(), "external evaluator: empty command");
    require(opts_.dim >= 1, "external evaluator: dim must be at least 1");
    require(opts_.batch_size >= 1, "external evaluator: batch_size must be at least 1");
    require(opts_.timeout.count() > 0, "external evaluator: timeout must be positive");

    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
        fail(ErrorCode::Io, std::string("external evaluator: socketpair failed: ") + std::strerror(errno));
    const pid_t pid = ::fork();
    if (pid < 0) {
        ::close(sv[0]);
        ::close(sv[1]);
        fail(ErrorCode::Io, std::string("external evaluator: fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        // Own process group, so shutdown can also reach anything the shell forks.
        ::setpgid(0, 0);
        ::dup2(sv[1], STDIN_FILENO);
        ::dup2(sv[1], STDOUT_FILENO);
        ::execl("/bin/sh", "sh", "-c", opts_.command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    ::close(sv[1]);
    pid_ = pid;
    fd_ = sv[0];
    ::fcntl(fd_, F_SETFL, ::fcntl(fd_, F_GETFL) | O_NONBLOCK);

    try {
        send("HELLO dim=" + std::to_string(opts_.dim) + "\n");
        const std::string reply = read_line();
        if (reply != "READY") broken("expected READY after HELLO, got " + quoted(reply));
    } catch (...) {
        shutdown();
        throw;
    }
}

ExternalEvaluator::~ExternalEvaluator() { shutdown(); }

void ExternalEvaluator::shutdown() noexcept {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
    if (pid_ > 0) {
        int status = 0;
        // Closing the socket lets a well-behaved evaluator exit on EOF.
        for (int i = 0; i < 50; ++i) {
            if (::waitpid(pid_, &status, WNOHANG) != 0) {
                ::kill(-pid_, SIGKILL);
                pid_ = -1;
                return;
            }
            ::usleep(2000);
        }
        ::kill(-pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
        pid_ = -1;
    }
}

void ExternalEvaluator::broken(const std::string& msg) {
    failed_ = true;
    fail(ErrorCode::Protocol, "external evaluator: " + msg);
}

void ExternalEvaluator::send(const std::string& text) {
    const auto deadline = Clock::now() + opts_.timeout;
    std::size_t done = 0;
    while (done < text.size()) {
        const ssize_t w = ::send(fd_, text.data() + done, text.size() - done, MSG_NOSIGNAL);
        if (w > 0) {
            done += static_cast<std::size_t>(w);
            continue;
        }
        if (w < 0 && errno == EINTR) continue;
        if (w < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
            pollfd p{fd_, POLLOUT, 0};
            const int rc = ::poll(&p, 1, remaining_ms(deadline));
            if (rc == 0) broken("timed out writing a request");
            if (rc < 0 && errno != EINTR) broken(std::string("poll failed: ") + std::strerror(errno));
            continue;
        }
        broken(std::string("process closed its input (") + std::strerror(errno) + ")");
    }
}

std::string ExternalEvaluator::read_line() {
    const auto deadline = Clock::now() + opts_.timeout;
    for (;;) {
        const auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string line = trim(buffer_.substr(0, nl));
            buffer_.erase(0, nl + 1);
            return line;
        }
        pollfd p{fd_, POLLIN, 0};
        const int rc = ::poll(&p, 1, remaining_ms(deadline));
        if (rc == 0)
            broken("timed out after " + std::to_string(opts_.timeout.count()) + " ms waiting for a reply");
        if (rc < 0) {
            if (errno == EINTR) continue;
            broken(std::string("poll failed: ") + std::strerror(errno));
        }
        char chunk[65536];
        const ssize_t r = ::recv(fd_, chunk, sizeof chunk, 0);
        if (r > 0) {
            buffer_.append(chunk, static_cast<std::size_t>(r));
        } else if (r == 0) {
            broken("process exited before replying" +
                   (buffer_.empty() ? std::string() : " (partial line " + quoted(buffer_) + ")"));
        } else if (errno != EINTR && errno != EAGAIN && errno != EWOULDBLOCK) {
            broken(std::string("read failed: ") + std::strerror(errno));
        }
    }
}

void ExternalEvaluator::evaluate(std::span<const double> rows, std::span<double> out) {
    std::lock_guard lock(mutex_);
    if (failed_) fail(ErrorCode::Protocol, "external evaluator: unusable after an earlier failure");
    const std::size_t D = opts_.dim;
    require(rows.size() % D == 0, "external evaluator: row buffer is not a multiple of dim");
    require_dim(out.size(), rows.size() / D, "external evaluator (output)");
    const std::size_t n = out.size();
    for (std::size_t first = 0; first < n; first += opts_.batch_size) {
        const std::size_t count = std::min(opts_.batch_size, n - first);
        evaluate_batch(rows.subspan(first * D, count * D), out.subspan(first, count));
    }
}

void ExternalEvaluator::evaluate_batch(std::span<const double> rows, std::span<double> out) {
    const std::size_t D = opts_.dim, count = out.size();
    const std::uint64_t id = next_id_++;
    std::string req = "EVAL " + std::to_string(id) + " " + std::to_string(count) + "\n";
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t d = 0; d < D; ++d) {
            if (d) req += ' ';
            req += format_double(rows[i * D + d]);
        }
        req += '\n';
    }
    send(req);

    const std::string header = read_line();
    if (header != "OK " + std::to_string(id)) broken("expected 'OK " + std::to_string(id) + "', got " + quoted(header));
    for (std::size_t i = 0; i < count; ++i) {
        const std::string line = read_line();
        double v = 0.0;
        const char* b = line.data();
        const char* e = b + line.size();
        const auto [ptr, ec] = std::from_chars(b, e, v);
        if (line.empty() || ec != std::errc() || ptr != e || std::isnan(v) || v == HUGE_VAL)
            broken("non-numeric or invalid value " + quoted(line) + " for row " + std::to_string(i) + " of batch " +
                   std::to_string(id));
        out[i] = v;
    }
}

TargetDensity external_target(std::shared_ptr<ExternalEvaluator> evaluator, std::string label) {
    require(evaluator != nullptr, "external_target: null evaluator");
    const std::size_t dim = evaluator->dim();
    return TargetDensity::from_batch(
        dim, [ev = std::move(evaluator)](std::span<const double> rows, std::span<double> out) { ev->evaluate(rows, out); },
        std::move(label));
}

} // namespace warpbridge
