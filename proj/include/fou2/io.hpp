#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

// Atomic file output: write to a sibling temp file, then rename over the
// target, so interrupted runs never leave truncated CSV/JSON behind.

namespace fou2 {

inline void atomic_write_file(const std::filesystem::path& path,
                              const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os)
      throw std::runtime_error("atomic_write_file: cannot open " +
                               tmp.string());
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os)
      throw std::runtime_error("atomic_write_file: write failed for " +
                               tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace fou2
