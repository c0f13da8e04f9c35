#pragma once

#include <cstdint>

namespace scalesearch {

// 64-bit finalizer from the splitmix64 generator. Full avalanche, cheap.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

// Combine a key with a salt into a new key. Used to derive independent
// streams: identical (key, salt) pairs always yield the same derived key,
// regardless of how much either stream has been consumed.
constexpr std::uint64_t derive_key(std::uint64_t key, std::uint64_t salt) {
    return mix64(key + 0x9E3779B97F4A7C15ull * (salt + 1));
}

// Deterministic random stream (splitmix64). The full sequence is a pure
// function of the construction key, so streams are reproducible across
// platforms and independent of std:: distribution implementations.
class RngStream {
public:
    explicit RngStream(std::uint64_t key) : key_(key), state_(key) {}

    // Independent child stream; derivation depends only on the key, never on
    // how many values have been drawn from this stream.
    RngStream derive(std::uint64_t salt) const { return RngStream(derive_key(key_, salt)); }

    std::uint64_t key() const { return key_; }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix64(state_);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_double() < p; }

    // Uniform in [0, n). Modulo bias is below n / 2^64 and irrelevant here.
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    // Uniform integer in [lo, hi], inclusive.
    long long uniform_int(long long lo, long long hi) {
        if (hi <= lo) return lo;
        return lo + static_cast<long long>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

private:
    std::uint64_t key_;
    std::uint64_t state_;
};

}  // namespace scalesearch
