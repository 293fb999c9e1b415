#include "movdet/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>

namespace movdet {

long long intersection_area(const BoundingBox& a, const BoundingBox& b) noexcept {
  const long long w = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const long long h = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  return (w > 0 && h > 0) ? w * h : 0;
}

bool intersects(const BoundingBox& a, const BoundingBox& b) noexcept { return intersection_area(a, b) > 0; }

BoundingBox enclosing(const BoundingBox& a, const BoundingBox& b) noexcept {
  const int x0 = std::min(a.x, b.x);
  const int y0 = std::min(a.y, b.y);
  return {x0, y0, std::max(a.right(), b.right()) - x0, std::max(a.bottom(), b.bottom()) - y0};
}

BoundingBox clip(const BoundingBox& box, int width, int height) noexcept {
  const int x0 = std::clamp(box.x, 0, width);
  const int y0 = std::clamp(box.y, 0, height);
  const int x1 = std::clamp(box.right(), 0, width);
  const int y1 = std::clamp(box.bottom(), 0, height);
  return {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

// ---------------------------------------------------------------------------
// Homography

Homography::Homography() noexcept : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}

Homography::Homography(const std::array<double, 9>& m) : m_(m) {
  if (m_[8] != 0.0) {
    const double s = m_[8];
    for (double& v : m_) v /= s;
    m_[8] = 1.0;
  }
}

Homography Homography::translation(double tx, double ty) noexcept {
  Homography h;
  h.m_[2] = tx;
  h.m_[5] = ty;
  return h;
}

Homography Homography::scaling(double sx, double sy) noexcept {
  Homography h;
  h.m_[0] = sx;
  h.m_[4] = sy;
  return h;
}

double Homography::determinant() const noexcept {
  const auto& m = m_;
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

bool Homography::invertible(double epsilon) const noexcept {
  const double det = determinant();
  return std::isfinite(det) && std::abs(det) > epsilon;
}

bool Homography::is_identity() const noexcept { return *this == Homography(); }

Homography Homography::inverse(double epsilon) const {
  if (!invertible(epsilon)) {
    throw SingularTransformError("homography is not invertible");
  }
  const auto& m = m_;
  const double inv_det = 1.0 / determinant();
  std::array<double, 9> r{
      (m[4] * m[8] - m[5] * m[7]) * inv_det, (m[2] * m[7] - m[1] * m[8]) * inv_det,
      (m[1] * m[5] - m[2] * m[4]) * inv_det, (m[5] * m[6] - m[3] * m[8]) * inv_det,
      (m[0] * m[8] - m[2] * m[6]) * inv_det, (m[2] * m[3] - m[0] * m[5]) * inv_det,
      (m[3] * m[7] - m[4] * m[6]) * inv_det, (m[1] * m[6] - m[0] * m[7]) * inv_det,
      (m[0] * m[4] - m[1] * m[3]) * inv_det,
  };
  return Homography(r);
}

Point2d Homography::apply(const Point2d& p) const noexcept {
  const auto& m = m_;
  const double w = m[6] * p.x + m[7] * p.y + m[8];
  return {(m[0] * p.x + m[1] * p.y + m[2]) / w, (m[3] * p.x + m[4] * p.y + m[5]) / w};
}

Homography Homography::operator*(const Homography& rhs) const noexcept {
  std::array<double, 9> r{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) acc += (*this)(i, k) * rhs(k, j);
      r[static_cast<std::size_t>(i * 3 + j)] = acc;
    }
  }
  return Homography(r);
}

// ---------------------------------------------------------------------------
// Warping

SourceMap::SourceMap(int width, int height, const Homography& h)
    : width_(width), height_(height), identity_(h.is_identity()) {
  if (width <= 0 || height <= 0) {
    throw DimensionError("source map dimensions must be positive");
  }
  const Homography inv = h.inverse();
  src_.resize(static_cast<std::size_t>(width) * height);
  const auto& m = inv.matrix();
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  for (int y = 0; y < height; ++y) {
    Point2d* out = src_.data() + static_cast<std::size_t>(y) * width;
    for (int x = 0; x < width; ++x) {
      const double w = m[6] * x + m[7] * y + m[8];
      if (std::abs(w) < 1e-12) {
        out[x] = {nan, nan};
        continue;
      }
      out[x] = {(m[0] * x + m[1] * y + m[2]) / w, (m[3] * x + m[4] * y + m[5]) / w};
    }
  }
}

namespace {

constexpr double kEdgeTolerance = 1e-9;

template <typename T>
T store(double v) {
  if constexpr (std::is_floating_point_v<T>) {
    return static_cast<T>(v);
  } else {
    const double r = std::nearbyint(v);
    return static_cast<T>(std::clamp(r, static_cast<double>(std::numeric_limits<T>::min()),
                                     static_cast<double>(std::numeric_limits<T>::max())));
  }
}

}  // namespace

template <typename T>
Warped<T> remap(const Plane<T>& src, const SourceMap& map, Interpolation interpolation) {
  if (src.width() != map.width() || src.height() != map.height()) {
    throw DimensionError("remap: source plane and map dimensions differ");
  }
  const int w = src.width();
  const int h = src.height();
  Warped<T> out{Plane<T>(w, h), BinaryMask(w, h)};
  if (map.identity()) {
    out.image = src;
    std::fill(out.valid.values().begin(), out.valid.values().end(), std::uint8_t{1});
    return out;
  }
  const double max_x = w - 1;
  const double max_y = h - 1;
  for (int y = 0; y < h; ++y) {
    T* dst = out.image.row(y);
    std::uint8_t* valid = out.valid.row(y);
    for (int x = 0; x < w; ++x) {
      const Point2d p = map.source(x, y);
      if (interpolation == Interpolation::nearest) {
        const double rx = std::floor(p.x + 0.5);
        const double ry = std::floor(p.y + 0.5);
        if (!(rx >= 0.0 && rx <= max_x && ry >= 0.0 && ry <= max_y)) continue;
        dst[x] = src(static_cast<int>(rx), static_cast<int>(ry));
        valid[x] = 1;
        continue;
      }
      if (!(p.x >= -kEdgeTolerance && p.x <= max_x + kEdgeTolerance && p.y >= -kEdgeTolerance &&
            p.y <= max_y + kEdgeTolerance)) {
        continue;
      }
      const double sx = std::clamp(p.x, 0.0, max_x);
      const double sy = std::clamp(p.y, 0.0, max_y);
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double fx = sx - x0;
      const double fy = sy - y0;
      const double top = (1.0 - fx) * src(x0, y0) + fx * src(x1, y0);
      const double bottom = (1.0 - fx) * src(x0, y1) + fx * src(x1, y1);
      dst[x] = store<T>((1.0 - fy) * top + fy * bottom);
      valid[x] = 1;
    }
  }
  return out;
}

template Warped<float> remap(const Plane<float>&, const SourceMap&, Interpolation);
template Warped<std::uint8_t> remap(const Plane<std::uint8_t>&, const SourceMap&, Interpolation);
template Warped<std::uint16_t> remap(const Plane<std::uint16_t>&, const SourceMap&, Interpolation);

// ---------------------------------------------------------------------------
// Color

SvPlanes rgb_to_sv(const RgbImage& frame) {
  if (frame.width <= 0 || frame.height <= 0 ||
      frame.data.size() != static_cast<std::size_t>(frame.width) * frame.height * 3) {
    throw DimensionError("rgb_to_sv: frame has invalid dimensions");
  }
  SvPlanes out{ImagePlane(frame.width, frame.height), ImagePlane(frame.width, frame.height)};
  const std::uint8_t* px = frame.data.data();
  auto s = out.s.values();
  auto v = out.v.values();
  // Saturation indexed by [max][max - min].
  static const std::vector<std::uint8_t> table = [] {
    std::vector<std::uint8_t> t(256 * 256, 0);
    for (unsigned mx = 1; mx < 256; ++mx) {
      for (unsigned d = 0; d <= mx; ++d) t[mx * 256 + d] = static_cast<std::uint8_t>((255u * d + mx / 2) / mx);
    }
    return t;
  }();
  for (std::size_t i = 0; i < s.size(); ++i, px += 3) {
    const unsigned mx = std::max({px[0], px[1], px[2]});
    const unsigned mn = std::min({px[0], px[1], px[2]});
    v[i] = static_cast<std::uint8_t>(mx);
    s[i] = table[mx * 256 + (mx - mn)];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Morphology

namespace {

void combine(int n, bool erosion, const std::uint8_t* __restrict a, std::uint8_t* __restrict out) {
  if (erosion) {
    for (int i = 0; i < n; ++i) out[i] &= a[i];
  } else {
    for (int i = 0; i < n; ++i) out[i] |= a[i];
  }
}

// One separable pass. For erosion the whole window must lie inside the plane
// and be set; for dilation any set pixel inside the clipped window suffices.
BinaryMask window_pass(const BinaryMask& in, int radius, bool horizontal, bool erosion) {
  const int w = in.width();
  const int h = in.height();
  BinaryMask out(w, h);
  if (horizontal) {
    std::vector<std::uint8_t> src(w);
    for (int y = 0; y < h; ++y) {
      const std::uint8_t* row = in.row(y);
      for (int x = 0; x < w; ++x) src[x] = row[x] != 0;
      std::uint8_t* o = out.row(y);
      std::copy(src.begin(), src.end(), o);
      for (int d = 1; d <= radius && d < w; ++d) {
        combine(w - d, erosion, src.data() + d, o);
        combine(w - d, erosion, src.data(), o + d);
      }
      if (erosion) {
        std::fill_n(o, std::min(radius, w), std::uint8_t{0});
        const int tail = std::max(w - radius, 0);
        std::fill_n(o + tail, w - tail, std::uint8_t{0});
      }
    }
    return out;
  }
  for (int y = 0; y < h; ++y) {
    std::uint8_t* o = out.row(y);
    if (erosion && (y < radius || y >= h - radius)) continue;
    const std::uint8_t* c = in.row(y);
    for (int x = 0; x < w; ++x) o[x] = c[x] != 0;
    for (int yy = std::max(y - radius, 0); yy <= std::min(y + radius, h - 1); ++yy) {
      if (yy == y) continue;
      const std::uint8_t* r = in.row(yy);
      if (erosion) {
        for (int x = 0; x < w; ++x) o[x] &= r[x] != 0;
      } else {
        for (int x = 0; x < w; ++x) o[x] |= r[x] != 0;
      }
    }
  }
  return out;
}

void check_radius(const BinaryMask& mask, int radius) {
  if (mask.empty()) throw DimensionError("morphology: empty mask");
  if (radius < 1) throw Error("morphology: radius must be >= 1");
}

}  // namespace

BinaryMask erode(const BinaryMask& mask, int radius) {
  check_radius(mask, radius);
  return window_pass(window_pass(mask, radius, true, true), radius, false, true);
}

BinaryMask dilate(const BinaryMask& mask, int radius) {
  check_radius(mask, radius);
  return window_pass(window_pass(mask, radius, true, false), radius, false, false);
}

BinaryMask morph_open(const BinaryMask& mask, int radius) { return dilate(erode(mask, radius), radius); }

// ---------------------------------------------------------------------------
// Connected components

std::vector<Region> connected_components(const BinaryMask& mask) {
  std::vector<Region> regions;
  if (mask.empty()) return regions;
  const int w = mask.width();
  const int h = mask.height();
  std::vector<int> labels(mask.size(), 0);
  std::vector<int> stack;
  int next_label = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t seed = static_cast<std::size_t>(y) * w + x;
      if (mask(x, y) == 0 || labels[seed] != 0) continue;
      ++next_label;
      Region region{0, {x, y, 1, 1}, next_label};
      int x0 = x, y0 = y, x1 = x, y1 = y;
      labels[seed] = next_label;
      stack.push_back(static_cast<int>(seed));
      while (!stack.empty()) {
        const int idx = stack.back();
        stack.pop_back();
        const int cx = idx % w;
        const int cy = idx / w;
        ++region.pixel_count;
        x0 = std::min(x0, cx);
        x1 = std::max(x1, cx);
        y0 = std::min(y0, cy);
        y1 = std::max(y1, cy);
        for (int dy = -1; dy <= 1; ++dy) {
          const int ny = cy + dy;
          if (ny < 0 || ny >= h) continue;
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx;
            if (nx < 0 || nx >= w) continue;
            const std::size_t n = static_cast<std::size_t>(ny) * w + nx;
            if (mask(nx, ny) != 0 && labels[n] == 0) {
              labels[n] = next_label;
              stack.push_back(static_cast<int>(n));
            }
          }
        }
      }
      region.bbox = {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
      regions.push_back(region);
    }
  }
  std::stable_sort(regions.begin(), regions.end(), [](const Region& a, const Region& b) {
    return a.bbox.y != b.bbox.y ? a.bbox.y < b.bbox.y : a.bbox.x < b.bbox.x;
  });
  return regions;
}

}  // namespace movdet
