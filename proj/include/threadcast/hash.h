#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace threadcast {

// XXH64, bit-compatible with the reference implementation. Input is read
// byte-wise so results do not depend on host endianness.
std::uint64_t xxhash64(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0);
std::uint64_t xxhash64(std::string_view text, std::uint64_t seed = 0);

// Maps a 64-bit hash onto [0, 1) using the top 53 bits.
double hash_to_unit(std::uint64_t h);

std::string hex64(std::uint64_t h);

}  // namespace threadcast
