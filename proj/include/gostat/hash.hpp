#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace gostat {

// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

// 64-bit mixer used to derive per-item random streams from a seed.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t seed, std::string_view text);

}  // namespace gostat
