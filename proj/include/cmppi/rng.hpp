#pragma once

#include <cstdint>
#include <limits>

namespace cmppi {

/// Minimal splitmix64 engine. Satisfies UniformRandomBitGenerator, so the
/// <random> distributions work on top of it. Seeding is a single word, which
/// keeps per-sample stream derivation cheap.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}
} // namespace detail

/// Hierarchical stream key. child(i) derives an independent substream, so a
/// batch item's draws depend only on its index path, never on evaluation
/// order. This is what makes batched sampling order-independent and lets a
/// run with a larger budget reproduce the smaller run's draws as a prefix.
struct RngKey {
    std::uint64_t v = 0;

    RngKey child(std::uint64_t i) const { return RngKey{detail::mix64(v, i)}; }
    SplitMix64 engine() const { return SplitMix64(v); }
};

} // namespace cmppi
