#pragma once

#include <cmath>
#include <cstdint>

namespace discnet {

// Splittable counter-based random stream. Every draw is a pure function of
// (key, counter): the output sequence is the splitmix64 sequence rooted at
// the key, and derive() folds an index word into a child key. Substreams
// derived for (run, step, agent, ...) are therefore reproducible regardless
// of scheduling or draw interleaving elsewhere.
class SplitStream {
public:
    explicit SplitStream(std::uint64_t seed)
        : key_(mix(seed ^ UINT64_C(0x6C62272E07BB0142))) {}

    // Child stream keyed by (this stream, word). Does not consume draws.
    SplitStream derive(std::uint64_t word) const {
        return SplitStream(ByKey{}, mix(key_ ^ mix(word + UINT64_C(0x9E3779B97F4A7C15))));
    }

    std::uint64_t next_u64() {
        counter_ += UINT64_C(0x9E3779B97F4A7C15);
        return mix(key_ + counter_);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return next_unit() < p; }

    // Sum of n Bernoulli(p) draws. Exact distribution, O(n) time; the step
    // sizes used here keep n small enough that this is the simplest safe
    // choice.
    std::int64_t binomial(std::int64_t n, double p) {
        if (n <= 0 || p <= 0.0) return 0;
        if (p >= 1.0) return n;
        std::int64_t count = 0;
        for (std::int64_t i = 0; i < n; ++i) count += bernoulli(p) ? 1 : 0;
        return count;
    }

    // Poisson(mean) via exponential interarrivals; numerically safe for any
    // mean (no product underflow), O(mean) time.
    std::int64_t poisson(double mean) {
        if (!(mean > 0.0)) return 0;
        std::int64_t count = 0;
        double acc = 0.0;
        for (;;) {
            acc += -std::log(1.0 - next_unit());
            if (acc >= mean) return count;
            ++count;
        }
    }

private:
    struct ByKey {};
    SplitStream(ByKey, std::uint64_t key) : key_(key) {}

    // splitmix64 finalizer (Vigna); full-avalanche bijection on 64 bits.
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= UINT64_C(0xBF58476D1CE4E5B9);
        z ^= z >> 27;
        z *= UINT64_C(0x94D049BB133111EB);
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace discnet
