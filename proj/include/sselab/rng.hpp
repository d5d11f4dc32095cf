#pragma once

#include <cstdint>
#include <random>

namespace sselab {

namespace detail {

// SplitMix64 finalizer; used only to derive well-separated generator seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Reproducibility token for one random stream.
///
/// A stream is a pure function of (master_seed, stream_index): the generator is
/// seeded by hashing both words, so selecting stream k is O(1) and independent
/// of how many other streams exist or which worker draws them.
struct RngPolicy {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;

    RngPolicy with_stream(std::uint64_t index) const { return {master_seed, index}; }

    std::mt19937_64 engine() const {
        const std::uint64_t a = detail::splitmix64(master_seed);
        const std::uint64_t b = detail::splitmix64(a ^ detail::splitmix64(stream_index + 0x632BE59BD9B4E019ULL));
        std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                          static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                          static_cast<std::uint32_t>(stream_index),
                          static_cast<std::uint32_t>(stream_index >> 32)};
        return std::mt19937_64(seq);
    }

    friend bool operator==(const RngPolicy&, const RngPolicy&) = default;
};

}  // namespace sselab
