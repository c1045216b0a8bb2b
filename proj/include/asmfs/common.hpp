#ifndef ASMFS_COMMON_HPP
#define ASMFS_COMMON_HPP

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <iostream>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace asmfs {

inline constexpr const char* version_string = "asmfs 1.0.0";

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Errors. ValidationError covers bad input (files, shapes, labels, configs);
// everything else derived from Error is a runtime/numeric failure.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : Error {
    using Error::Error;
};

struct NumericError : Error {
    using Error::Error;
};

/// Raised when a subject has too few same-class peers for the requested K.
struct NeighborCountError : Error {
    NeighborCountError(Index subject, Index candidates, int k)
        : Error("subject " + std::to_string(subject) + " has " + std::to_string(candidates) +
                " within-class candidates, need at least " + std::to_string(k + 1) + " for K=" +
                std::to_string(k)),
          subject(subject), candidates(candidates), k(k) {}
    Index subject;
    Index candidates;
    int k;
};

// ---------------------------------------------------------------------------
// Logging, controlled by ASMFS_LOG in {error, warn, info, debug}.

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

namespace detail {

inline LogLevel parse_log_level(const char* s) {
    if (s == nullptr) return LogLevel::warn;
    std::string_view v(s);
    if (v == "error") return LogLevel::error;
    if (v == "info") return LogLevel::info;
    if (v == "debug") return LogLevel::debug;
    return LogLevel::warn;
}

inline std::mutex& log_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace detail

inline LogLevel log_level() {
    static const LogLevel level = detail::parse_log_level(std::getenv("ASMFS_LOG"));
    return level;
}

inline void log(LogLevel level, const std::string& message) {
    if (static_cast<int>(level) > static_cast<int>(log_level())) return;
    static constexpr const char* names[] = {"error", "warn", "info", "debug"};
    std::lock_guard<std::mutex> lock(detail::log_mutex());
    std::cerr << "[asmfs " << names[static_cast<int>(level)] << "] " << message << '\n';
}

inline void warn(const std::string& message) { log(LogLevel::warn, message); }

// ---------------------------------------------------------------------------
// Seeding. Every random stream is derived from a top-level seed plus a path of
// counters, so each subsystem is reproducible on its own.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = splitmix64(seed);
    for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632BE59BD9B4E019ULL));
    return h;
}

using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Runs fn(0..count-1) on up to `jobs` threads. Results must be written to
// per-index slots by the caller; the first exception is rethrown.

inline void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace asmfs

#endif  // ASMFS_COMMON_HPP
