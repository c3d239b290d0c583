#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace forcelab {

// Raised when inputs violate an operation's preconditions. The CLI maps
// this to exit code 2.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Raised when a computation fails at runtime (divergence, failed
// calibration, I/O). The CLI maps this to exit code 1.
class RuntimeFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
double norm(Vec2 v);

// Number of worker threads, capped by FORCELAB_THREADS when set.
std::size_t thread_count();

// Runs body(begin, end) over contiguous chunks of [0, n). Chunk boundaries
// depend only on n and the thread count, and callers write disjoint
// outputs, so results never depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

// splitmix64 finalizer; used to derive independent per-task seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace forcelab
