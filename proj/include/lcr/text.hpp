#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lcr {

std::string_view trim(std::string_view s);
std::vector<std::string> split_lines(std::string_view text);
// Lower-case alphanumeric words (ASCII), for stoplist scans.
std::vector<std::string> split_words(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace lcr
