// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>

namespace testutil {

inline std::filesystem::path data_dir() { return {PYAB_DATA_DIR}; }

// Writes content to a unique temp file and returns its path.
inline std::filesystem::path write_temp(const std::string& content,
                                        const std::string& suffix = ".txt") {
  static int counter = 0;
  const auto path = std::filesystem::temp_directory_path() /
                    ("pyab_test_" + std::to_string(::getpid()) + "_" +
                     std::to_string(counter++) + suffix);
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

}  // namespace testutil
