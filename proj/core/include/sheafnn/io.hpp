#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace sheafnn {

/// Writes `content` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partially written file. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Reads a whole file. Throws IoError naming the path.
std::string read_file(const std::filesystem::path& path);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double x);

}  // namespace sheafnn
