#pragma once

#include <string>

namespace acl {

// Reads a whole file as bytes. Throws std::runtime_error if unreadable.
std::string read_file(const std::string& path);

// Writes bytes to a temp file in the target directory, then renames it
// over the destination, so readers never observe a partial file.
void write_file_atomic(const std::string& path, const std::string& bytes);

}  // namespace acl
