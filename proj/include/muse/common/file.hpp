#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace muse {

/// Whole-file helpers; both throw Error(IoError) on failure.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace muse
