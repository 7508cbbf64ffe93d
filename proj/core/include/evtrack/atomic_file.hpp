#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string_view>

namespace evtrack {

/// Writes a file through a temporary sibling and renames it into place, so readers never
/// observe a partially written file. The writer callback receives a binary stream.
void write_file_atomic(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& writer);

void write_text_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace evtrack
