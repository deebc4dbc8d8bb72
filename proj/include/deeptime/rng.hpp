#pragma once

#include <cmath>
#include <cstdint>

#include "deeptime/errors.hpp"
#include "deeptime/matrix.hpp"

namespace deeptime::numkit {

// Counter-based deterministic generator. Each draw hashes (key, counter),
// so a stream is a pure function of the seed and the call order; split()
// derives an independent sub-stream per consumer. Identical seeds give
// bit-identical integer streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : key_(mix64(seed ^ 0x6c1b3c6eb9f0c15bULL)) {}

    // Independent sub-stream keyed by a caller-chosen id.
    Rng split(std::uint64_t stream_id) const {
        Rng child(0);
        child.key_ = mix64(key_ ^ mix64(stream_id + 0x9e3779b97f4a7c15ULL));
        child.counter_ = 0;
        return child;
    }

    std::uint64_t next_u64() { return mix64(key_ + kGolden * (++counter_)); }

    // Uniform on [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]; safe as a log() argument.
    double next_double_open() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; consumes two uniforms per value.
    double next_normal() {
        const double u1 = next_double_open();
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Index in [0, n).
    std::size_t next_index(std::size_t n) {
        return static_cast<std::size_t>(next_double() * static_cast<double>(n)) % n;
    }

private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
    static constexpr double kPi = 3.14159265358979323846;

    // SplitMix64 finalizer.
    static std::uint64_t mix64(std::uint64_t x) {
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ULL;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebULL;
        x ^= x >> 31;
        return x;
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

inline Matrix randn(Rng& rng, std::size_t rows, std::size_t cols, double sigma) {
    if (!(sigma > 0.0)) throw InvalidConfig("randn: sigma must be positive");
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = sigma * rng.next_normal();
    return m;
}

inline Matrix rand_uniform(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
    if (!(lo < hi)) throw InvalidConfig("rand_uniform: lo must be < hi");
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.next_uniform(lo, hi);
    return m;
}

// In-place Fisher-Yates shuffle, deterministic per rng state.
template <typename T>
void shuffle(Rng& rng, std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = rng.next_index(i);
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace deeptime::numkit
