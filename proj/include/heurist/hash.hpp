#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace heurist {

// Lowercase hex SHA-256 digests.
std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const std::filesystem::path &path);

std::string read_file(const std::filesystem::path &path);
// Writes via a temporary sibling and rename so readers never observe a
// partial file.
void write_file(const std::filesystem::path &path, std::string_view bytes);

} // namespace heurist
