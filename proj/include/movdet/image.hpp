#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "movdet/errors.hpp"

namespace movdet {

/// Single-channel row-major raster.
template <typename T>
class Plane {
 public:
  using value_type = T;

  Plane() = default;

  Plane(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
      throw DimensionError("plane dimensions must be positive");
    }
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  T* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_; }
  const T* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * width_; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  template <typename U>
  bool same_dims(const Plane<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const Plane&) const = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Quantized 8-bit channel (input frames, S and V planes).
using ImagePlane = Plane<std::uint8_t>;
/// Fractional-precision plane (model means, differences, flow, weights).
using ModelPlane = Plane<float>;
/// Plane restricted to {0, 1}.
using BinaryMask = Plane<std::uint8_t>;
using AgePlane = Plane<std::uint16_t>;

/// Interleaved 8-bit RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h) {
    if (w <= 0 || h <= 0) {
      throw DimensionError("image dimensions must be positive");
    }
    data.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, 0);
  }

  bool empty() const noexcept { return data.empty(); }
  std::uint8_t* pixel(int x, int y) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* pixel(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }

  bool operator==(const RgbImage&) const = default;
};

struct Point2d {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2d&) const = default;
};

/// Axis-aligned integer box; (x, y) is the top-left corner.
struct BoundingBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int right() const noexcept { return x + w; }
  int bottom() const noexcept { return y + h; }
  long long area() const noexcept { return static_cast<long long>(w) * h; }

  bool operator==(const BoundingBox&) const = default;
};

long long intersection_area(const BoundingBox& a, const BoundingBox& b) noexcept;
/// True when the boxes share a region of positive area; touching edges do not count.
bool intersects(const BoundingBox& a, const BoundingBox& b) noexcept;
BoundingBox enclosing(const BoundingBox& a, const BoundingBox& b) noexcept;
/// Clip to [0, width) x [0, height). Returns a zero-size box when nothing is left.
BoundingBox clip(const BoundingBox& box, int width, int height) noexcept;

/// 3x3 projective transform, stored row-major and normalized so that m[2][2] == 1
/// whenever that entry is non-zero.
class Homography {
 public:
  Homography() noexcept;
  explicit Homography(const std::array<double, 9>& m);

  static Homography identity() noexcept { return Homography(); }
  static Homography translation(double tx, double ty) noexcept;
  static Homography scaling(double sx, double sy) noexcept;

  double operator()(int r, int c) const noexcept { return m_[static_cast<std::size_t>(r * 3 + c)]; }
  const std::array<double, 9>& matrix() const noexcept { return m_; }

  double determinant() const noexcept;
  bool invertible(double epsilon = 1e-12) const noexcept;
  bool is_identity() const noexcept;
  /// Throws SingularTransformError when |det| <= epsilon.
  Homography inverse(double epsilon = 1e-12) const;

  Point2d apply(const Point2d& p) const noexcept;
  Homography operator*(const Homography& rhs) const noexcept;

  bool operator==(const Homography&) const = default;

 private:
  std::array<double, 9> m_;
};

enum class Interpolation { nearest, bilinear };

/// Per-pixel source coordinates of an inverse-mapped warp. Built once and
/// reused when several planes go through the same transform.
class SourceMap {
 public:
  SourceMap(int width, int height, const Homography& h);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool identity() const noexcept { return identity_; }
  const Point2d& source(int x, int y) const { return src_[static_cast<std::size_t>(y) * width_ + x]; }

 private:
  int width_;
  int height_;
  bool identity_;
  std::vector<Point2d> src_;
};

template <typename T>
struct Warped {
  Plane<T> image;
  BinaryMask valid;
};

/// dst(x, y) = src sampled at h^-1 * (x, y, 1). For bilinear sampling a pixel is
/// valid iff every tap carrying non-zero weight lies inside src; for nearest,
/// iff the rounded source index does. Invalid pixels are 0.
template <typename T>
Warped<T> remap(const Plane<T>& src, const SourceMap& map, Interpolation interpolation);

template <typename T>
Warped<T> warp_perspective(const Plane<T>& src, const Homography& h, Interpolation interpolation) {
  if (src.empty()) {
    throw DimensionError("warp_perspective: empty source plane");
  }
  return remap(src, SourceMap(src.width(), src.height(), h), interpolation);
}

struct SvPlanes {
  ImagePlane s;
  ImagePlane v;
};

/// HSV saturation and value, both scaled to [0, 255] and rounded. Hue is dropped.
SvPlanes rgb_to_sv(const RgbImage& frame);

/// Square structuring element of side 2 * radius + 1, out-of-bounds reads as 0.
BinaryMask erode(const BinaryMask& mask, int radius);
BinaryMask dilate(const BinaryMask& mask, int radius);
BinaryMask morph_open(const BinaryMask& mask, int radius);

struct Region {
  int pixel_count = 0;
  BoundingBox bbox;
  int label = 0;
};

/// 8-connected components ordered by (bbox.y, bbox.x), then by raster-scan discovery.
std::vector<Region> connected_components(const BinaryMask& mask);

}  // namespace movdet
