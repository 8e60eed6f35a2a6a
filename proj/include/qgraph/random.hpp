#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace qgraph {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a, used to key per-node streams by variable name.
constexpr std::uint64_t hash_name(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Independent generator for a (seed, stream, chain) triple. Distinct triples
/// give statistically unrelated streams; equal triples give equal streams.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream = 0,
                       std::uint64_t chain = 0) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ stream);
  h = mix64(h ^ (chain + 0x632be59bd9b4e019ULL));
  return Rng(h);
}

namespace draw {

/// Uniform on the open interval (0, 1).
template <typename Gen>
double uniform(Gen& g) {
  return (static_cast<double>(g() >> 11) + 0.5) * 0x1.0p-53;
}

template <typename Gen>
double normal(Gen& g) {
  return std::normal_distribution<double>(0.0, 1.0)(g);
}

template <typename Gen>
double exponential(Gen& g, double rate) {
  return -std::log(uniform(g)) / rate;
}

// Shape/rate parametrization.
template <typename Gen>
double gamma(Gen& g, double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(g);
}

template <typename Gen>
double beta(Gen& g, double a, double b) {
  const double x = gamma(g, a, 1.0);
  const double y = gamma(g, b, 1.0);
  return x / (x + y);
}

template <typename Gen>
bool bernoulli(Gen& g, double p) {
  return uniform(g) < p;
}

}  // namespace draw
}  // namespace qgraph
