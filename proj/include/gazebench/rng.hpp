#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace gazebench {

// Deterministic, platform-independent RNG. std::uniform_int_distribution is
// not guaranteed to produce the same stream across standard libraries, so all
// sampling in the project goes through this class instead.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        // splitmix64
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Unbiased integer in [0, n). n must be > 0.
    uint64_t below(uint64_t n) {
        const uint64_t threshold = (0ULL - n) % n;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Uniform double in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Fisher-Yates shuffle with explicit bounded draws.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            using std::swap;
            swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
};

// FNV-1a over bytes; used only for seed derivation, not content addressing.
inline uint64_t fnv1a(std::string_view s, uint64_t h = 0xCBF29CE484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    Rng r(a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2)));
    return r.next_u64();
}

// Derives a child seed from a run seed plus string/index components, so that
// e.g. per-(sample, epoch) question draws are reproducible in isolation.
inline uint64_t derive_seed(uint64_t root, std::string_view name, uint64_t index = 0) {
    return mix_seed(mix_seed(root, fnv1a(name)), index);
}

}  // namespace gazebench
