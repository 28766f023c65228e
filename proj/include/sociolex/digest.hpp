#pragma once

#include <string>

namespace sociolex {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file_hex(const std::string& path);

// Writes to <path>.tmp and renames into place, so readers never observe a
// partially written artifact.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace sociolex
