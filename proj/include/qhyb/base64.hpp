#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qhyb::base64 {

/// Standard alphabet, '=' padded.
std::string encode(std::span<const std::uint8_t> bytes);

/// Returns nullopt on a bad character, bad padding, or a length not divisible by 4.
std::optional<std::vector<std::uint8_t>> decode(std::string_view text);

} // namespace qhyb::base64
