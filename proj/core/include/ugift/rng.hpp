#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace ugift {

// FNV-1a over bytes. Offset basis 14695981039346656037, prime 1099511628211.
std::uint64_t fnv1a64(std::string_view bytes);

// splitmix64 finalizer. Constants fixed so derived streams are portable.
std::uint64_t mix64(std::uint64_t x);

// All randomness in the project flows through seeds derived here:
// child = mix chain over (master, fnv1a(purpose), indices...). Distinct
// (purpose, indices) give independent streams; there is no global RNG.
class SeedTree {
 public:
  static std::uint64_t derive(std::uint64_t master, std::string_view purpose,
                              std::initializer_list<std::uint64_t> indices = {});
};

// Deterministic stream generator over splitmix64. Unlike the std::
// distributions, every method here is fully specified, so outputs are
// identical across platforms and compilers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53-bit resolution.
  double uniform();

  // Uniform in (0, 1), never returns an endpoint.
  double uniform_open();

  // Uniform integer in [0, bound). bound must be > 0. Unbiased via rejection.
  std::uint64_t uniform_int(std::uint64_t bound);

  // In-place Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices drawn uniformly without replacement from [0, n).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::uint64_t state_;
};

}  // namespace ugift
