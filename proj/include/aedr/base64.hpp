#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aedr {

std::string base64_encode(std::span<const std::uint8_t> bytes);

/// Strict RFC 4648 decoding (padding required); throws aedr::Error on bad input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace aedr
