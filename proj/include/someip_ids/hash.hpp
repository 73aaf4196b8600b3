#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace someip_ids {

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(const std::string& text);
// Throws std::runtime_error if the file cannot be read.
std::string sha256_file_hex(const std::string& path);

}  // namespace someip_ids
