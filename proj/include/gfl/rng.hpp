#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <vector>

namespace gfl {

// splitmix64 finalizer, used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag,
                                 std::uint64_t index = 0) {
  return mix64(mix64(mix64(seed) ^ tag) ^ index);
}

// Stream purposes. Keeping tags fixed keeps every generated artifact
// reproducible from the experiment seed alone.
namespace stream_tag {
constexpr std::uint64_t topology = 0x544f504fu;  // graph, labels, splits
constexpr std::uint64_t features = 0x46454154u;  // per-seed feature draws
constexpr std::uint64_t init = 0x494e4954u;      // model initialization
constexpr std::uint64_t batch = 0x42415443u;     // per-client batch shuffles
constexpr std::uint64_t noise = 0x4e4f4953u;     // per-client DP noise
}  // namespace stream_tag

// Deterministic random stream: mt19937_64 engine with explicit transforms.
// The standard specifies the engine's output exactly; the distribution
// transforms are implemented here so that generated values do not depend
// on the standard library build.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  static RandomStream from(std::uint64_t seed, std::uint64_t tag,
                           std::uint64_t index = 0) {
    return RandomStream(derive_seed(seed, tag, index));
  }

  // uniform double in [0, 1) with 53 random bits
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // standard normal via Box-Muller; the spare value is cached
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // uniform integer in [0, n), rejection-sampled to avoid modulo bias
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t bound = n * ((~std::uint64_t{0}) / n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= bound);
    return x % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_int(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gfl
