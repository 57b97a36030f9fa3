#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace animgan {

using Rng = std::mt19937_64;

/// Mixes a run seed, a named substream and an index into an independent seed.
/// Every random draw in a run flows from one config seed through these streams,
/// so a resumed run regenerates exactly the draws of an uninterrupted one.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
  return Rng(derive_seed(seed, stream, index));
}

}  // namespace animgan
