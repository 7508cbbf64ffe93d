#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "evtrack/simulator.hpp"

namespace evtrack {

/// Reads a binary (P5) or ASCII (P2) graymap with maxval <= 255, scaled to [0, 1].
Frame read_pgm(std::istream& in, const std::string& source_name = "<stream>");
Frame load_pgm(const std::filesystem::path& path);

/// Writes a P5 graymap, rounding intensities clamped to [0, 1] to 8 bits.
void write_pgm(std::ostream& out, const Frame& frame);
void save_pgm(const std::filesystem::path& path, const Frame& frame);

}  // namespace evtrack
