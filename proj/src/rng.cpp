#include "sparareal/rng.hpp"

namespace sparareal {

std::uint64_t mix64(std::uint64_t x) noexcept {
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

SplitMix64 RngStream::substream(std::uint64_t realization, std::uint64_t k, std::uint64_t n,
                                DrawKind kind) const noexcept {
    // Sponge-style absorption: each field is mixed in after a golden-ratio offset,
    // so permuting fields yields a different key.
    constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ULL;
    std::uint64_t h = mix64(master_seed_ + golden);
    h = mix64(h ^ (static_cast<std::uint64_t>(kind) + golden));
    h = mix64(h ^ (realization + 2 * golden));
    h = mix64(h ^ (k + 3 * golden));
    h = mix64(h ^ (n + 4 * golden));
    return SplitMix64(h);
}

}  // namespace sparareal
