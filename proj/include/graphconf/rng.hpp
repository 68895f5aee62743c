#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace graphconf {

// All randomness flows from one config seed through named substreams
// ("gen", "predictor", "split", ...) so that adding draws to one stage can
// never shift the draws of another. Bounded draws are implemented explicitly
// (not via std::uniform_*_distribution) so results do not depend on the
// standard library implementation.
class rng {
  public:
    explicit rng(std::uint64_t seed) : engine_(seed) {}

    rng(std::uint64_t seed, std::string_view stream) : engine_(derive_seed(seed, stream)) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1): 53 mantissa bits, so every value is exact in double.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on {0, 1, ..., bound-1} via rejection (unbiased), bound >= 1.
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % bound);
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % bound;
    }

    // Uniform on {lo, ..., hi} inclusive.
    std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    bool next_bernoulli(double p) { return next_double() < p; }

    // Fisher-Yates; identity when n <= 1.
    std::vector<std::size_t> next_permutation_of(std::size_t n) {
        std::vector<std::size_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = i;
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(p[i - 1], p[j]);
        }
        return p;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    static std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) {
        // FNV-1a over the stream name, then splitmix64 to decorrelate.
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (char c : stream) {
            h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
            h *= 0x100000001b3ULL;
        }
        return splitmix64(seed ^ h);
    }

    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace graphconf
