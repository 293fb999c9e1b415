#include "movdet/foreground.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace movdet {

void ForegroundParams::validate() const {
  if (!(t_base > 0) || !(lambda1 > 0) || !(lambda2 > 0) || t_age <= 0 || !(t_mag > 0) || !(w_cap >= 1)) {
    throw ConfigError("foreground parameters must be positive (w_cap >= 1)");
  }
}

namespace {

void min_abs_diff(int w, const float* __restrict mu, const float* __restrict shifted, float* __restrict best) {
  for (int x = 0; x < w; ++x) best[x] = std::min(best[x], std::abs(shifted[x] - mu[x]));
}

}  // namespace

// Edge-replicated rows give the same minimum as a window clipped to the plane.
ModelPlane neighborhood_difference(const ImagePlane& frame, const ModelPlane& mu) {
  if (frame.empty() || !frame.same_dims(mu)) {
    throw DimensionError("neighborhood_difference: frame and mean differ in size");
  }
  const int w = frame.width();
  const int h = frame.height();
  ModelPlane d(w, h, 256.0f);
  std::vector<float> padded(static_cast<std::size_t>(h) * (w + 2));
  for (int y = 0; y < h; ++y) {
    float* p = padded.data() + static_cast<std::size_t>(y) * (w + 2);
    const std::uint8_t* r = frame.row(y);
    p[0] = r[0];
    for (int x = 0; x < w; ++x) p[x + 1] = r[x];
    p[w + 1] = r[w - 1];
  }
  for (int y = 0; y < h; ++y) {
    for (int ny = std::max(0, y - 1); ny <= std::min(h - 1, y + 1); ++ny) {
      const float* p = padded.data() + static_cast<std::size_t>(ny) * (w + 2);
      for (int dx = 0; dx < 3; ++dx) min_abs_diff(w, mu.row(y), p + dx, d.row(y));
    }
  }
  return d;
}

ModelPlane fuse_sv(const ModelPlane& d_s, const ModelPlane& d_v) {
  if (d_s.empty() || !d_s.same_dims(d_v)) throw DimensionError("fuse_sv: planes differ in size");
  ModelPlane out(d_s.width(), d_s.height());
  auto a = d_s.values();
  auto b = d_v.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::max(a[i], b[i]);
  return out;
}

double adaptive_threshold(const ForegroundParams& params, double a_bg) {
  if (a_bg < 0.0) throw Error("adaptive_threshold: background motion must be non-negative");
  return params.t_base * params.lambda1 * std::exp(a_bg * params.lambda2);
}

ModelPlane weighted_difference(const ModelPlane& d, const ModelPlane& weights) {
  if (d.empty() || !d.same_dims(weights)) throw DimensionError("weighted_difference: planes differ in size");
  ModelPlane out(d.width(), d.height());
  auto a = d.values();
  auto w = weights.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = w[i] * a[i];
  return out;
}

BinaryMask threshold_mask(const ModelPlane& d_w, double t_a, const AgePlane& age, int t_age) {
  if (d_w.empty() || !d_w.same_dims(age)) throw DimensionError("threshold_mask: planes differ in size");
  BinaryMask mask(d_w.width(), d_w.height());
  auto d = d_w.values();
  auto a = age.values();
  auto m = mask.values();
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = (static_cast<double>(d[i]) > t_a && static_cast<int>(a[i]) > t_age) ? 1 : 0;
  }
  return mask;
}

}  // namespace movdet
