#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace smf {

using cxd = std::complex<double>;

// Counter-derived seeding: every (seed, stream) pair owns an independent
// mt19937_64 stream, so trials can run in any order or thread without
// changing the numbers they draw.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1));
}

class Prng {
  public:
    explicit Prng(std::uint64_t seed) : eng_(seed) {}

    static Prng derived(std::uint64_t seed, std::uint64_t stream) {
        return Prng(mix_seed(seed, stream));
    }

    // Uniform in [0,1), 53-bit resolution. Avoids std::uniform_real_distribution
    // so the stream is identical across standard library implementations.
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // Box-Muller pair; both components consumed so the stream advances by
    // exactly two engine draws per call.
    cxd gaussian_pair() {
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log1p(-u1));
        return {r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2)};
    }

    double gaussian() { return gaussian_pair().real(); }

    // Complex standard normal: independent N(0,1) real and imaginary parts.
    cxd complex_gaussian() { return gaussian_pair(); }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Rejection-free modulo bias is negligible for our n (<= a few dozen),
        // but keep it exact anyway.
        std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

  private:
    std::mt19937_64 eng_;
};

} // namespace smf
