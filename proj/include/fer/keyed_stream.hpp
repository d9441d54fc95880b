#pragma once

#include <cstdint>

namespace fer {

/// Purpose tags keep independent consumers of one global seed from sharing draws.
enum class StreamDomain : std::uint64_t {
    augmentation = 1,
    epoch_order = 2,
    subset = 3,
};

/// SplitMix64 output finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-mode generator keyed on (domain, seed, a, b).
///
/// The key is folded as k = mix64(k ^ (word + golden)) over the four words, and
/// draw i is mix64(key + (i + 1) * golden). Every draw is therefore a pure
/// function of its key and position, with no state shared between keys.
class KeyedStream {
public:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

    constexpr KeyedStream(StreamDomain domain, std::uint64_t seed, std::uint64_t a, std::uint64_t b)
        : key_(fold(fold(fold(fold(0, static_cast<std::uint64_t>(domain)), seed), a), b)) {}

    constexpr std::uint64_t key() const { return key_; }

    /// Draw at an absolute counter position.
    constexpr std::uint64_t at(std::uint64_t position) const { return mix64(key_ + (position + 1) * kGolden); }

    constexpr std::uint64_t next() { return at(counter_++); }

    /// Uniform in [0, 1) with 53 bits.
    constexpr double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Multiply-shift; bias below 2^-64 * n.
    constexpr std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
    }

private:
    static constexpr std::uint64_t fold(std::uint64_t k, std::uint64_t word) { return mix64(k ^ (word + kGolden)); }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace fer
