#pragma once

#include <cstdint>
#include <span>

namespace partlab {

inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based stream: output i is a hash of (seed, stream, i), so streams
// can be split off without touching shared state.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix64(seed ^ mix64(stream * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL))) {}

    std::uint64_t next() { return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    std::uint64_t below(std::uint64_t n) {
        // Lemire's multiply-shift; bias is < 2^-64 * n, irrelevant here.
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    // Index drawn from a probability vector (need not be normalised exactly).
    std::size_t pick(std::span<const double> probs) {
        double u = uniform(), acc = 0.0;
        for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return i;
        }
        return probs.size() - 1;
    }

    Rng split(std::uint64_t id) const { return Rng(key_, id + 1); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace partlab
