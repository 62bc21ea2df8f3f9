#pragma once

#include <bit>
#include <cstdint>
#include <vector>

namespace cascade {

/// Subset of one node's outgoing links; bit i is the i-th link in id order.
using LocalMask = std::uint64_t;

constexpr LocalMask full_mask(std::size_t degree) {
  return degree >= 64 ? ~LocalMask{0} : (LocalMask{1} << degree) - 1;
}

constexpr bool contains(LocalMask m, std::size_t i) { return (m >> i) & 1U; }
constexpr LocalMask without(LocalMask m, std::size_t i) { return m & ~(LocalMask{1} << i); }
constexpr LocalMask single(std::size_t i) { return LocalMask{1} << i; }
inline int popcount(LocalMask m) { return std::popcount(m); }

inline std::vector<std::size_t> members(LocalMask m) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; m != 0; ++i, m >>= 1) {
    if (m & 1U) out.push_back(i);
  }
  return out;
}

}  // namespace cascade
