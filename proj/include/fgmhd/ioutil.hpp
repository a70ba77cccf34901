#pragma once

#include <string>

namespace fgmhd {

// Writes to <path>.tmp then renames, so a failed run never leaves a partial
// file at the destination.
void atomic_write_text(const std::string& path, const std::string& content);

std::string read_text_file(const std::string& path);

// Fixed-precision decimal formatting for CSV cells; snprintf-based so the
// bytes are identical across runs and platforms.
std::string csv_double(double v, int precision = 6);

}  // namespace fgmhd
