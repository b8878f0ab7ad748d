#include "synbd/rng.h"

#include <limits>
#include <numeric>

namespace synbd {

std::uint64_t Rng::uniform_below(std::uint64_t n) {
  if (n <= 1) return 0;
  // 2^64 mod n, computed without 128-bit arithmetic.
  const std::uint64_t rem = (std::numeric_limits<std::uint64_t>::max() % n + 1) % n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - rem + 1;
  for (;;) {
    const std::uint64_t x = next();
    if (rem == 0 || x < limit) return x % n;
  }
}

double Rng::uniform01() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = uniform_below(i);
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::uint64_t splitmix_finalize(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) {
  return splitmix_finalize(seed ^ fnv1a64(name));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix_finalize(seed ^ splitmix_finalize(index));
}

}  // namespace synbd
