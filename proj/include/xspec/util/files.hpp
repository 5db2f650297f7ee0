#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace xspec {

// Writes to a sibling temp file and renames over the target, so a failed
// write never leaves a partial file behind.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

std::vector<std::string> read_lines(const std::filesystem::path& path);

// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string> split_lines(std::string_view text);

// Splits on runs of ASCII whitespace.
std::vector<std::string> split_ws(std::string_view line);

}  // namespace xspec
