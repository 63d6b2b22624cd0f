#pragma once

#include <cstdint>
#include <random>

namespace advdiff {

// Seed derivation for independent per-agent / per-purpose streams. The
// mapping from raw engine output to doubles is spelled out here rather than
// delegated to <random> distributions, so that runs are reproducible
// bit-for-bit regardless of the standard library in use.
uint64_t splitmix64(uint64_t& state);
uint64_t derive_seed(uint64_t master, uint64_t stream_tag, uint64_t index);

// Stream tags for derive_seed.
inline constexpr uint64_t kTagInit = 0x1;
inline constexpr uint64_t kTagData = 0x2;
inline constexpr uint64_t kTagGraph = 0x3;
inline constexpr uint64_t kTagProbe = 0x4;

class Rng {
  public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // inclusive bounds, rejection-sampled
    int uniform_int(int lo, int hi);

    // standard normal, Box-Muller with cached spare
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

  private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace advdiff
