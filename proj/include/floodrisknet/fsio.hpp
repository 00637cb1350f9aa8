// Small file helpers. All writers are atomic (temp file + rename) so a
// crashed run never leaves a partially written artifact behind.

#pragma once

#include <filesystem>
#include <string>

namespace frn {

std::string read_file(const std::filesystem::path& path);

void atomic_write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace frn
