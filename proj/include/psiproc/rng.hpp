#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace psiproc {

// Counter-based 64-bit generator: output i is the SplitMix64 finalizer applied
// to seed + (i+1)*golden. Stateless apart from the counter, so streams can be
// replayed or split by arithmetic on seeds alone.
class Rng {
public:
    static constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ull;

    explicit Rng(std::uint64_t seed) : seed_(seed) {}

    static constexpr std::string_view algorithm_id() { return "splitmix64-counter/open53"; }

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t next_u64() { return mix(seed_ + (++counter_) * golden); }

    // uniform on the open interval (0,1): ((x>>12)+0.5) * 2^-52
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
    }

    double exponential() { return -std::log(uniform_open()); }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    // derived stream for replica r / substream purposes
    static std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
        return mix(seed ^ (golden * (index + 1)));
    }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

} // namespace psiproc
