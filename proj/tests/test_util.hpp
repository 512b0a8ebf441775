#pragma once

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "clotkit/raster.hpp"

namespace clotkit::testing {

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    const auto base = std::filesystem::temp_directory_path();
    path_ = base / ("clotkit_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  os << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline std::string read_bytes(const std::filesystem::path& path) {
  return read_text(path);
}

/// Raster filled from a std::mt19937 so fixtures are independent of the
/// production RNG.
inline RasterImage random_raster(int w, int h, std::mt19937& gen) {
  RasterImage img(w, h);
  std::uniform_int_distribution<int> dist(0, 255);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(dist(gen));
  return img;
}

}  // namespace clotkit::testing
