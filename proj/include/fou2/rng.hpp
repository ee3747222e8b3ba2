#pragma once

#include <array>
#include <cstdint>

#include "fou2/special.hpp"

// Counter-based random numbers: a Philox-style 4x64 bijection with 10
// rounds. There is no sequential state; variate block j of sample i under
// seed s is a pure function of (s, purpose, i, j), so any scheduling of a
// parallel sweep reproduces the same stream bit-for-bit. Gaussian variates
// come from the inverse-CDF transform (see normal_quantile), never from
// rejection, for the same reason.

namespace fou2 {

struct Philox4x64 {
  static constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
  static constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
  static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

  std::array<std::uint64_t, 2> key;

  static void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                      std::uint64_t& lo) {
    const unsigned __int128 prod =
        static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(b);
    hi = static_cast<std::uint64_t>(prod >> 64);
    lo = static_cast<std::uint64_t>(prod);
  }

  std::array<std::uint64_t, 4> operator()(
      std::array<std::uint64_t, 4> ctr) const {
    std::uint64_t k0 = key[0], k1 = key[1];
    for (int round = 0; round < 10; ++round) {
      std::uint64_t hi0, lo0, hi1, lo1;
      mulhilo(kMul0, ctr[0], hi0, lo0);
      mulhilo(kMul1, ctr[2], hi1, lo1);
      ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    return ctr;
  }
};

// Uniform in the open interval (0,1); never returns an endpoint. The forced
// low bit keeps the 53-bit product exact, so no rounding can reach 0 or 1.
inline double u64_to_open_unit(std::uint64_t x) {
  return static_cast<double>((x >> 11) | 1ULL) * 0x1p-53;
}

// Stream purposes keep independent substreams under one user seed.
namespace stream {
inline constexpr std::uint64_t kStatistic = 1;
inline constexpr std::uint64_t kOracle = 2;
inline constexpr std::uint64_t kTest = 3;
}  // namespace stream

// Fill out[0..count) with standard normals for (seed, purpose, index).
inline void fill_std_normal(std::uint64_t seed, std::uint64_t purpose,
                            std::uint64_t index, double* out, int count) {
  const Philox4x64 gen{{seed, purpose}};
  int k = 0;
  for (std::uint64_t block = 0; k < count; ++block) {
    const auto words = gen({index, block, 0x464F5532ULL, 0});
    for (int w = 0; w < 4 && k < count; ++w, ++k)
      out[k] = normal_quantile(u64_to_open_unit(words[w]));
  }
}

// Fill out[0..count) with Exp(rate) variates for (seed, purpose, index).
inline void fill_exponential(std::uint64_t seed, std::uint64_t purpose,
                             std::uint64_t index, double rate, double* out,
                             int count) {
  const Philox4x64 gen{{seed, purpose}};
  int k = 0;
  for (std::uint64_t block = 0; k < count; ++block) {
    const auto words = gen({index, block, 0x464F5532ULL, 1});
    for (int w = 0; w < 4 && k < count; ++w, ++k)
      out[k] = -std::log(u64_to_open_unit(words[w])) / rate;
  }
}

}  // namespace fou2
