#pragma once

#include "graspforge/error.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <system_error>

namespace graspforge {

/// Writes `bytes` to a sibling temp file and renames it over `path`, so
/// readers never observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("IoError", "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("IoError", "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("IoError", "cannot rename " + tmp.string() + ": " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path, const char* missing_kind = "IoError") {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(missing_kind, "cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace graspforge
