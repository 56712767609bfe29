#ifndef RELCI_RANDOM_H_
#define RELCI_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <random>

namespace relci {

// Portable pseudo-random source.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The standard <random> distributions are implementation-defined,
// so every derived quantity (uniform reals, bounded integers, normals) is
// computed here with fixed algorithms. Results are therefore identical across
// compilers and platforms for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound). Lemire's multiply-and-reject method.
  std::size_t Index(std::size_t bound);

  // Standard normal via the Box-Muller transform (one value per call; the
  // paired value is discarded so the stream position is call-count driven).
  double Normal();

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer. Used to derive independent child seeds from a master
// seed and a counter, so parallel work can be partitioned without changing
// results.
std::uint64_t MixSeed(std::uint64_t x);

inline std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t stream) {
  return MixSeed(master ^ MixSeed(stream + 0x9e3779b97f4a7c15ULL));
}

}  // namespace relci

#endif  // RELCI_RANDOM_H_
