#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace rlab {

using Rng = std::mt19937_64;

// splitmix64 finalizer; good avalanche for seed derivation.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derive an independent stream seed from a root seed and a purpose tag.
// All randomness in the project flows from one root seed through this.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ mix64(root);
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                                 std::uint64_t index) {
  return mix64(derive_seed(root, tag) ^ mix64(index * 0x9e3779b97f4a7c15ULL + 1));
}

inline Rng make_rng(std::uint64_t root, std::string_view tag) {
  return Rng(derive_seed(root, tag));
}

// Uniform double in [0, 1). Avoids std distributions so sequences are
// identical across standard library implementations.
inline double rand_u01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform double in (0, 1), never returning an exact endpoint.
inline double rand_open01(Rng& rng) {
  double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  return u;
}

// Uniform index in [0, n).
inline int rand_index(Rng& rng, int n) {
  return static_cast<int>((static_cast<unsigned __int128>(rng()) *
                           static_cast<unsigned __int128>(n)) >> 64);
}

// Standard normal via Box-Muller on our own uniforms.
inline double rand_normal(Rng& rng) {
  double u1 = rand_open01(rng);
  double u2 = rand_u01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

template <typename T>
void shuffle_vec(std::vector<T>& v, Rng& rng) {
  for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
    int j = rand_index(rng, i + 1);
    std::swap(v[i], v[static_cast<size_t>(j)]);
  }
}

}  // namespace rlab
