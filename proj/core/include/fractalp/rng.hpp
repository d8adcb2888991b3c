#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>

namespace fractalp {

// Counter-based splittable RNG.
//
// Every draw is a pure function of (seed, stream, counter), so independent
// streams can be handed to parallel workers without any shared state and the
// results cannot depend on scheduling or thread count.  The mixer is the
// 64-bit murmur3/splitmix finalizer chained over the three words; it is not
// cryptographic, just well-avalanched, which is all Monte Carlo needs.
inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

inline constexpr std::uint64_t rng_word(std::uint64_t seed, std::uint64_t stream,
                                        std::uint64_t counter) {
  // Golden-ratio offsets keep the all-zero key away from the fixed point of
  // the finalizer and decorrelate the three lanes.
  std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
  h = mix64(h ^ (stream + 0xbf58476d1ce4e5b9ULL));
  h = mix64(h ^ (counter + 0x94d049bb133111ebULL));
  return h;
}

// FNV-1a over a string tag; used to derive stream ids from purpose labels so
// different parts of a run ("cloud", "pairs", ...) never share a stream.
inline constexpr std::uint64_t stream_tag(std::string_view tag, std::uint64_t a = 0,
                                          std::uint64_t b = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  h = mix64(h ^ mix64(a));
  h = mix64(h ^ mix64(b + 0x632be59bd9b4e019ULL));
  return h;
}

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream) {}

  CounterRng(std::uint64_t seed, std::string_view tag, std::uint64_t a = 0,
             std::uint64_t b = 0)
      : seed_(seed), stream_(stream_tag(tag, a, b)) {}

  std::uint64_t next_u64() { return rng_word(seed_, stream_, counter_++); }

  // uniform in [0,1) with 53 random mantissa bits
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // uniform integer in [0, n); n >= 1.  Multiply-shift (Lemire) without the
  // rejection step: the modulo bias is < n / 2^64, irrelevant at our scale
  // and keeps the draw count deterministic.
  std::uint64_t uniform_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // standard normal via Box-Muller; consumes exactly two words per pair
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    // avoid log(0)
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.283185307179586476925286766559 * u2;
    spare_ = rad * std::sin(ang);
    have_spare_ = true;
    return rad * std::cos(ang);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace fractalp
