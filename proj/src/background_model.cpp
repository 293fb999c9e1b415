#include "movdet/background_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace movdet {

namespace {

ModelPlane to_model(const ImagePlane& p) {
  ModelPlane out(p.width(), p.height());
  std::copy(p.values().begin(), p.values().end(), out.values().begin());
  return out;
}

// (1 - alpha) mu + alpha I, kept inside [min(mu, I), max(mu, I)] under rounding.
inline float blend(float mu, std::uint8_t observed, float alpha) {
  const float in = observed;
  const float r = mu + alpha * (in - mu);
  return std::clamp(r, std::min(mu, in), std::max(mu, in));
}

}  // namespace

BackgroundModel init_model(const ImagePlane& s, const ImagePlane& v) {
  if (s.empty() || v.empty() || !s.same_dims(v)) {
    throw DimensionError("init_model: S and V planes must be non-empty and equal in size");
  }
  return {to_model(s), to_model(v), AgePlane(s.width(), s.height(), 0)};
}

// One pass over all three planes. The per-pixel arithmetic matches SourceMap and
// remap exactly, so the result equals warping each plane separately.
namespace {

// Source coordinates of one destination row; NaN where the point maps to infinity.
__attribute__((target_clones("avx2", "default"))) void source_row(const std::array<double, 9>& m, int y, int w,
                                                                  double* __restrict px, double* __restrict py) {
  for (int x = 0; x < w; ++x) {
    const double wd = m[6] * x + m[7] * y + m[8];
    const bool finite = std::abs(wd) >= 1e-12;
    const double d = finite ? wd : 1.0;
    px[x] = finite ? (m[0] * x + m[1] * y + m[2]) / d : std::numeric_limits<double>::quiet_NaN();
    py[x] = finite ? (m[3] * x + m[4] * y + m[5]) / d : std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

BackgroundModel warp_model(const BackgroundModel& model, const Homography& h) {
  if (model.mu_v.empty()) throw DimensionError("warp_model: empty model");
  if (h.is_identity()) return model;
  const int w = model.width();
  const int ht = model.height();
  const Homography inv = h.inverse();
  const auto& m = inv.matrix();
  BackgroundModel out{ModelPlane(w, ht), ModelPlane(w, ht), AgePlane(w, ht, 0)};
  const double max_x = w - 1;
  const double max_y = ht - 1;
  constexpr double tol = 1e-9;
  std::vector<double> src_x(w), src_y(w);
  for (int y = 0; y < ht; ++y) {
    source_row(m, y, w, src_x.data(), src_y.data());
    float* ds = out.mu_s.row(y);
    float* dv = out.mu_v.row(y);
    std::uint16_t* da = out.age.row(y);
    for (int x = 0; x < w; ++x) {
      const double px = src_x[x];
      const double py = src_y[x];
      if (!(px >= -tol && px <= max_x + tol && py >= -tol && py <= max_y + tol)) continue;
      const double sx = std::clamp(px, 0.0, max_x);
      const double sy = std::clamp(py, 0.0, max_y);
      // Non-negative, so truncation is floor.
      const int x0 = static_cast<int>(sx);
      const int y0 = static_cast<int>(sy);
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, ht - 1);
      const double fx = sx - x0;
      const double fy = sy - y0;
      auto sample = [&](const ModelPlane& p) {
        const double top = (1.0 - fx) * p(x0, y0) + fx * p(x1, y0);
        const double bottom = (1.0 - fx) * p(x0, y1) + fx * p(x1, y1);
        return static_cast<float>((1.0 - fy) * top + fy * bottom);
      };
      ds[x] = sample(model.mu_s);
      dv[x] = sample(model.mu_v);
      // Inside the bilinear domain the nearest source is always in bounds.
      da[x] = model.age(static_cast<int>(px + 0.5), static_cast<int>(py + 0.5));
    }
  }
  return out;
}

BackgroundModel update_model(BackgroundModel model, const ImagePlane& s, const ImagePlane& v, int age_max) {
  if (age_max < 1) throw Error("update_model: age_max must be >= 1");
  if (!model.mu_s.same_dims(s) || !model.mu_v.same_dims(v)) {
    throw DimensionError("update_model: frame and model differ in size");
  }
  const auto cap = static_cast<std::uint16_t>(std::min(age_max, 65535));
  auto age = model.age.values();
  auto mu_s = model.mu_s.values();
  auto mu_v = model.mu_v.values();
  auto in_s = s.values();
  auto in_v = v.values();
  for (std::size_t i = 0; i < age.size(); ++i) {
    const std::uint16_t a = age[i] >= cap ? cap : static_cast<std::uint16_t>(age[i] + 1);
    age[i] = a;
    if (a == 1) {
      mu_s[i] = in_s[i];
      mu_v[i] = in_v[i];
      continue;
    }
    const float alpha = 1.0f / static_cast<float>(a);
    mu_s[i] = blend(mu_s[i], in_s[i], alpha);
    mu_v[i] = blend(mu_v[i], in_v[i], alpha);
  }
  return model;
}

}  // namespace movdet
