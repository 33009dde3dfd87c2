#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace ppm {

/// FIPS 180-4 SHA-256. Self-contained so digests are identical on every
/// platform and toolchain.
std::array<std::uint8_t, 32> sha256(std::string_view data);

/// Lowercase hex rendering of sha256(data).
std::string sha256_hex(std::string_view data);

/// Base-36 rendering (alphabet 0-9A-Z, most significant digit first) of the
/// digest interpreted as a big-endian 256-bit integer.
std::string sha256_base36(std::string_view data);

}  // namespace ppm
