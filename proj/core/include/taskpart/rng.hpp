#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace taskpart {

/// Deterministic 64-bit random stream (splitmix64). Every randomized
/// operation in the library draws from one of these so that results are a
/// pure function of the seed, independent of platform library details and
/// of how work is scheduled across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// Uniform real in [0, 1).
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Gaussian with mean 0 and the given standard deviation (Box-Muller).
  double gaussian(double sigma) {
    if (have_spare_) {
      have_spare_ = false;
      return spare_ * sigma;
    }
    double u1 = unit();
    double u2 = unit();
    while (u1 <= 0.0) u1 = unit();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta) * sigma;
  }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Derives an independent stream seed from a master seed, a purpose tag and
/// an item index. Distinct tags keep phase streams apart; the index gives
/// each parallel task (specialist, cloud, evaluation) its own stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index = 0) {
  Rng mixer(master ^ tag ^ (index * 0x9e3779b97f4a7c15ull));
  return mixer.next_u64();
}

}  // namespace taskpart
