#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace avsync {

std::string base64_encode(std::string_view bytes);
/// Throws std::invalid_argument on malformed input.
std::string base64_decode(std::string_view text);

/// Hex BLAKE2b-256 digest.
std::string content_hash(std::string_view bytes);
std::string file_hash(const std::filesystem::path& path);

/// Raw 32-byte BLAKE2b digest.
std::string hash_bytes(std::string_view bytes);

}  // namespace avsync
