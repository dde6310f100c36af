#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace tsvad {

// FIPS 180-4 SHA-256, used to fingerprint encoder files.
std::array<std::uint8_t, 32> sha256(const std::uint8_t* data, std::size_t size);
std::array<std::uint8_t, 32> sha256(const std::vector<std::uint8_t>& data);
std::string hex_digest(const std::array<std::uint8_t, 32>& digest);

}  // namespace tsvad
