#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace nligen {

// Hex SHA-1 of "blob <size>\0" + bytes, as git hashes file contents.
std::string git_blob_sha1(std::string_view bytes);
// Throws std::runtime_error if the file cannot be read.
std::string file_sha1(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
// Writes through a temp file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

} // namespace nligen
