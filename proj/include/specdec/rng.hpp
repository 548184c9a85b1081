#pragma once

#include <cstdint>
#include <random>

namespace specdec {

// Named stream ids. Every consumer derives its stream from the run's root
// seed with one of these, so draw sequences do not depend on the order in
// which modules happen to be called.
namespace stream {
constexpr uint64_t kArDraft        = 1;
constexpr uint64_t kDiffusionDraft = 2;
constexpr uint64_t kVerify         = 3;
constexpr uint64_t kVanilla        = 4;
constexpr uint64_t kCorrupt        = 5;
constexpr uint64_t kTrain          = 6;
constexpr uint64_t kPrompts        = 7;
constexpr uint64_t kTrialBase      = 1000;   // + trial index
constexpr uint64_t kSweepCellBase  = 100000; // + cell index
}  // namespace stream

/// Deterministic seeded RNG. Identical seed => identical draw sequence on
/// the same build. Streams are derived from the root seed and a stream id,
/// never by splitting live generator state.
class SeededRng {
  public:
    explicit SeededRng(uint64_t seed) : seed_(seed), gen_(mix(seed, 0)) {}

    /// Independent stream addressed by (this rng's seed, stream_id).
    /// Derivations compose: derive(a).derive(b) and derive(b).derive(a) are
    /// distinct streams, both reproducible from the root seed.
    SeededRng derive(uint64_t stream_id) const { return SeededRng(mix(seed_, stream_id)); }

    uint64_t seed() const { return seed_; }

    uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1). Built from the top 53 bits so the value is
    /// identical across platforms for a given seed.
    double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be > 0.
    uint64_t uniform_index(uint64_t n) { return static_cast<uint64_t>(uniform() * static_cast<double>(n)) % n; }

  private:
    static uint64_t splitmix(uint64_t x) {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    static uint64_t mix(uint64_t seed, uint64_t stream_id) {
        return splitmix(splitmix(seed) ^ splitmix(stream_id + 0x5851F42D4C957F2Dull));
    }

    uint64_t seed_;
    std::mt19937_64 gen_;
};

}  // namespace specdec
