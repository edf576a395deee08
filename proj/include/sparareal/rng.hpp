#pragma once

#include <cstdint>
#include <limits>

namespace sparareal {

/// Families of random draws. Each value keys a disjoint set of substreams.
enum class DrawKind : std::uint64_t {
    state_independent = 1,
    sampling_rule = 2,
    constant_estimation = 3,
    problem_setup = 4,
};

/// SplitMix64 generator. Satisfies UniformRandomBitGenerator, so it plugs
/// into the standard <random> distributions.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t state) noexcept : state_(state) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Finalizer of SplitMix64; a bijective avalanche mix.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Counter-based family of substreams derived from one master seed.
///
/// The draws for a given (realization, k, n, kind) depend only on that key and
/// the master seed, never on the order in which substreams are requested.
/// This is what makes parallel runs bit-identical to serial ones.
class RngStream {
public:
    explicit RngStream(std::uint64_t master_seed) noexcept : master_seed_(master_seed) {}

    [[nodiscard]] std::uint64_t master_seed() const noexcept { return master_seed_; }

    [[nodiscard]] SplitMix64 substream(std::uint64_t realization, std::uint64_t k, std::uint64_t n,
                                       DrawKind kind) const noexcept;

private:
    std::uint64_t master_seed_;
};

}  // namespace sparareal
