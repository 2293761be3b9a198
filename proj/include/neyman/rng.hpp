#pragma once
// Counter-based random streams.
//
// Algorithm (version 1): Philox4x32-10 (Salmon et al., SC'11) keyed by the
// 64-bit master seed. A stream is addressed by (trajectory index, tag) and a
// 32-bit block position; the 128-bit counter is
//
//     { position, tag, index_lo, index_hi }
//
// Philox is a bijection on counters for a fixed key, so distinct
// (master_seed, index, tag, position) tuples never share a block. Each block
// yields two 64-bit words. Uniform doubles use the top 53 bits; normals use
// Box-Muller on two uniforms.

#include <array>
#include <cstdint>

namespace neyman {

inline constexpr int kRngAlgorithmVersion = 1;

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) noexcept;

// Stream tags. Outcome arrays for the two arms and assignment randomization
// draw from disjoint tags, so comparing designs never perturbs outcomes.
enum class StreamTag : std::uint32_t {
    ControlOutcomes = 0,
    TreatedOutcomes = 1,
    Assignment = 2,
    Synthetic = 3,
    Oracle = 4,
};

class CounterStream {
public:
    CounterStream(std::uint64_t master_seed, std::uint64_t index, StreamTag tag) noexcept;
    CounterStream(std::uint64_t master_seed, std::uint64_t index, std::uint32_t tag) noexcept;

    std::uint64_t next_u64() noexcept;
    // Uniform on [0, 1).
    double uniform() noexcept;
    // Uniform on (0, 1]; safe for log().
    double uniform_pos() noexcept;
    double normal() noexcept;
    // Uniform integer in [0, n); n > 0. Lemire's nearly-divisionless method.
    std::uint64_t below(std::uint64_t n) noexcept;

    std::uint64_t blocks_consumed() const noexcept { return position_; }

private:
    void refill() noexcept;

    PhiloxKey key_{};
    std::uint32_t tag_ = 0;
    std::uint64_t index_ = 0;
    std::uint64_t position_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int available_ = 0;
    bool has_spare_normal_ = false;
    double spare_normal_ = 0.0;
};

}  // namespace neyman
