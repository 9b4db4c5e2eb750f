#pragma once

#include <cstdint>
#include <vector>

namespace covgnn {

// Self-contained xoshiro256** generator. All sampling helpers are implemented
// here rather than via <random> distributions, so that streams are
// bit-reproducible across compilers and platforms.
class Rng {
  public:
    explicit Rng(uint64_t seed) { reseed(seed); }

    void reseed(uint64_t seed) {
        // splitmix64 expansion of the seed into the full state
        uint64_t z = seed;
        for (auto& s : state_) {
            z += 0x9e3779b97f4a7c15ULL;
            uint64_t t = z;
            t = (t ^ (t >> 30)) * 0xbf58476d1ce4e5b9ULL;
            t = (t ^ (t >> 27)) * 0x94d049bb133111ebULL;
            s = t ^ (t >> 31);
        }
    }

    uint64_t next_u64() {
        auto rotl = [](uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    uint64_t below(uint64_t n) {
        const uint64_t threshold = (0 - n) % n;
        for (;;) {
            const uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    int index(size_t n) { return static_cast<int>(below(static_cast<uint64_t>(n))); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct values from {0, ..., n-1}, in random order.
    std::vector<int> sample_without_replacement(int n, int k) {
        std::vector<int> pool(n);
        for (int i = 0; i < n; ++i) pool[i] = i;
        std::vector<int> out;
        out.reserve(k);
        for (int i = 0; i < k; ++i) {
            const size_t j = i + below(static_cast<uint64_t>(n - i));
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }

    // Derive an independent stream, e.g. one per episode or trajectory.
    static uint64_t derive(uint64_t seed, uint64_t stream) {
        uint64_t z = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

  private:
    uint64_t state_[4]{};
};

}  // namespace covgnn
