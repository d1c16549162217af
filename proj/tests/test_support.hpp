#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "omnifmi/image.hpp"
#include "omnifmi/synthgen.hpp"

namespace testing_support {

inline std::string data_path(const std::string& name) { return std::string(OMNIFMI_TEST_DATA) + "/" + name; }

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("omnifmi_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string str(const std::string& name = "") const { return (path / name).string(); }
};

// Textured test image with structure at several scales.
inline omnifmi::Image texture(int w, int h, uint64_t seed) {
  return omnifmi::band_limited_noise(w, h, {{8.0, 0.7}, {4.0, 1.0}, {16.0, 0.7}}, seed);
}

inline omnifmi::Image crop(const omnifmi::Image& src, int x0, int y0, int w, int h) {
  omnifmi::Image out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(x, y) = src(x0 + x, y0 + y);
  return out;
}

inline double mean_abs_diff(const omnifmi::Image& a, const omnifmi::Image& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += std::abs(a.data[i] - b.data[i]);
  return s / static_cast<double>(a.size());
}

constexpr double kDeg = 3.14159265358979323846 / 180.0;

}  // namespace testing_support
