#pragma once

#include <string>
#include <vector>

namespace rlab::io {

// Writes to a temp file next to `path` and renames it into place, so readers
// never observe partial output.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Lines of a UTF-8 text file, with trailing \r stripped and empty lines
// dropped.
std::vector<std::string> read_lines(const std::string& path);

}  // namespace rlab::io
