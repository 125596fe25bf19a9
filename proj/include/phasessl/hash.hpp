#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace phasessl {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);
std::string sha256_hex(const std::vector<std::uint8_t>& data);

}  // namespace phasessl
