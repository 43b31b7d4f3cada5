#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gridmdp {

using Index = std::int64_t;
using Vector = Eigen::VectorXd;
using IndexVec = std::vector<Index>;

/// Configuration / input errors (bad keys, dimension mismatches, parse failures).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Expression syntax errors, carrying a 1-based source position.
struct ParseError : ConfigError {
    ParseError(const std::string& what, int line_, int col_)
        : ConfigError(what), line(line_), col(col_) {}
    int line;
    int col;
};

/// Numeric domain errors (division by zero, ln of non-positive, failed quadrature, ...).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Memory budget exceeded or size arithmetic overflow.
struct MemoryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File format / serialization errors.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Axis-aligned hyper-rectangle [lo_1,hi_1] x ... x [lo_d,hi_d].
struct Box {
    Vector lo;
    Vector hi;

    Box() = default;
    Box(Vector lo_, Vector hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {}

    int dim() const { return static_cast<int>(lo.size()); }
    bool empty() const { return lo.size() == 0 || (lo.array() > hi.array()).any(); }

    bool contains(const Vector& x) const {
        if (x.size() != lo.size()) return false;
        return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
    }

    double volume() const {
        if (empty()) return 0.0;
        return (hi - lo).array().prod();
    }

    bool operator==(const Box& o) const { return lo == o.lo && hi == o.hi; }
};

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b, const char* what) {
    if (a != 0 && b > UINT64_MAX / a)
        throw MemoryError(std::string(what) + ": size arithmetic overflows 64 bits");
    return a * b;
}

/// splitmix64; used to derive independent per-run / per-thread RNG streams.
inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace gridmdp
