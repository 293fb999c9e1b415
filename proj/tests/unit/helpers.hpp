#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "movdet/image.hpp"

namespace movdet::test {

// Smooth texture with structure in both directions, evaluated at real coordinates so
// shifted copies are exact.
inline double texture(double x, double y) {
  return 128.0 + 45.0 * std::sin(x / 6.0) * std::cos(y / 9.0) + 30.0 * std::sin((x + 2.0 * y) / 13.0) +
         15.0 * std::cos((3.0 * x - y) / 17.0);
}

inline ImagePlane textured(int w, int h, double sx = 0.0, double sy = 0.0) {
  ImagePlane p(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) p(x, y) = static_cast<std::uint8_t>(std::lround(texture(x - sx, y - sy)));
  return p;
}

inline ModelPlane textured_float(int w, int h) {
  ModelPlane p(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) p(x, y) = static_cast<float>(texture(x, y));
  return p;
}

template <typename T>
Plane<T> random_plane(int w, int h, std::mt19937& rng, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  Plane<T> p(w, h);
  for (auto& v : p.values()) v = static_cast<T>(d(rng));
  return p;
}

inline BinaryMask random_mask(int w, int h, std::mt19937& rng, double density) {
  std::bernoulli_distribution d(density);
  BinaryMask m(w, h);
  for (auto& v : m.values()) v = d(rng) ? 1 : 0;
  return m;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("movdet_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace movdet::test
