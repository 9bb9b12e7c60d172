#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>

namespace pessiq {

// 64-bit finalizer used by the splitmix64 generator (Steele, Lea, Flood 2014).
// Bijective on uint64, so distinct inputs never collide.
inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// Counter-based generator with a single uint64 word of state:
//
//     state <- state + 0x9E3779B97F4A7C15
//     output = mix64(state)
//
// This is splitmix64 verbatim. The state layout (one word, Weyl increment,
// finalizer above) is fixed so that ports in other languages can reproduce
// streams bit-for-bit.
class SplitMix64 {
  public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next_u64() noexcept {
        state_ += kGolden;
        return mix64(state_);
    }

    // Uniform double in [0, 1) from the top 53 bits.
    double next_double() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Inverse-CDF draw from a probability row (assumed nonnegative, summing
    // to ~1): walk the cumulative sum until it exceeds the uniform draw.
    // If rounding leaves the draw uncovered, the last positive entry wins.
    std::size_t next_index(std::span<const double> probs) {
        if (probs.empty()) throw std::invalid_argument("next_index: empty distribution");
        const double u = next_double();
        double cum = 0.0;
        std::size_t last_positive = 0;
        bool seen_positive = false;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] > 0.0) {
                last_positive = i;
                seen_positive = true;
            }
            cum += probs[i];
            if (u < cum) return i;
        }
        if (!seen_positive) throw std::invalid_argument("next_index: all-zero distribution");
        return last_positive;
    }

    constexpr std::uint64_t state() const noexcept { return state_; }

  private:
    std::uint64_t state_;
};

// Deterministic seed derivation. Components are folded one at a time:
//
//     h <- mix64(h ^ (mix64(c) + 0x9E3779B97F4A7C15))
//
// Order-sensitive, so (instance, agent, budget, seed) tuples map to stable
// per-cell streams no matter how many cells a sweep contains.
inline constexpr std::uint64_t fold_seed(std::uint64_t h, std::uint64_t component) noexcept {
    return mix64(h ^ (mix64(component) + kGolden));
}

}  // namespace pessiq
