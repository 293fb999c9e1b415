#include "movdet/dense_flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <memory>

#include <Eigen/Dense>
#include <immintrin.h>
#include <opencv2/imgproc.hpp>

namespace movdet {

namespace {

constexpr int kMinLevelSide = 32;
constexpr float kSolveRegularizer = 1e-3f;
// Confidence ramp for pixels whose expansion window touches the border.
constexpr std::array<float, 5> kBorderRamp{0.14f, 0.14f, 0.4472f, 0.8208f, 1.0f};

// Local quadratic model f ~ x'Ax + b'x + c, A = [axx axy; axy ayy].
using Vec8 = float __attribute__((vector_size(32)));
using Unaligned8 = float __attribute__((vector_size(32), aligned(4), may_alias));

// Hot loops get an AVX2 clone. No FMA, so both clones round identically.
#define MOVDET_CLONES __attribute__((target_clones("avx2", "default")))

using Int8 = int __attribute__((vector_size(32)));

// Quadratic coefficients as planes; rows padded to a multiple of eight.
enum Lane { kBx, kBy, kAxx, kAyy, kAxy, kLanes };

struct Expansion {
  int width = 0;
  int height = 0;
  int stride = 0;
  std::unique_ptr<float[]> c;
  float* plane(int k) const { return c.get() + static_cast<std::size_t>(k) * height * stride; }
  float* row(int k, int y) const { return plane(k) + static_cast<std::size_t>(y) * stride; }
};

struct Kernel {
  int n = 0;
  std::vector<float> g, tg, ttg;  // g(t), t g(t), t^2 g(t) for t = 0..n
  // Nonzero entries of the inverse Gram matrix, basis {1, x, y, x^2, y^2, xy}.
  float ix, iaa0, iaa3, iaa4, ibb0, ibb3, ibb4, ixy;
};

Kernel make_kernel(int n, double sigma) {
  Kernel k;
  k.n = n;
  std::vector<double> g(n + 1);
  double sum = 0;
  for (int t = 0; t <= n; ++t) {
    g[t] = std::exp(-t * t / (2 * sigma * sigma));
    sum += t == 0 ? g[t] : 2 * g[t];
  }
  for (int t = 0; t <= n; ++t) {
    g[t] /= sum;
    k.g.push_back(static_cast<float>(g[t]));
    k.tg.push_back(static_cast<float>(t * g[t]));
    k.ttg.push_back(static_cast<float>(t * t * g[t]));
  }
  Eigen::Matrix<double, 6, 6> gram = Eigen::Matrix<double, 6, 6>::Zero();
  for (int y = -n; y <= n; ++y) {
    for (int x = -n; x <= n; ++x) {
      const double w = g[std::abs(x)] * g[std::abs(y)];
      const Eigen::Matrix<double, 6, 1> b{1.0, double(x), double(y), double(x * x), double(y * y), double(x * y)};
      gram += w * b * b.transpose();
    }
  }
  const Eigen::Matrix<double, 6, 6> inv = gram.inverse();
  // The window is symmetric, so every other entry of these rows vanishes.
  k.ix = static_cast<float>(inv(1, 1));
  k.iaa0 = static_cast<float>(inv(3, 0));
  k.iaa3 = static_cast<float>(inv(3, 3));
  k.iaa4 = static_cast<float>(inv(3, 4));
  k.ibb0 = static_cast<float>(inv(4, 0));
  k.ibb3 = static_cast<float>(inv(4, 3));
  k.ibb4 = static_cast<float>(inv(4, 4));
  k.ixy = static_cast<float>(inv(5, 5));
  return k;
}

// Macros rather than functions: passing Vec8 by value is ABI-sensitive without AVX.
#define LOAD8(p) (*reinterpret_cast<const Unaligned8*>(p))
#define STORE8(p, v) (*reinterpret_cast<Unaligned8*>(p) = (v))

// Rows are processed eight pixels at a time with the accumulators held in registers;
// strides are rounded up so the last block may run past w.
MOVDET_CLONES Expansion expand(const cv::Mat& img, const Kernel& k) {
  const int w = img.cols;
  const int h = img.rows;
  const int n = k.n;
  const int stride = (w + 7) & ~7;
  const std::size_t area = static_cast<std::size_t>(stride) * h;
  // Taps broadcast to eight lanes: g, tg, ttg for each t.
  std::vector<float> taps(24 * static_cast<std::size_t>(n + 1));
  for (int t = 0; t <= n; ++t) {
    std::fill_n(taps.begin() + 24 * t, 8, k.g[t]);
    std::fill_n(taps.begin() + 24 * t + 8, 8, k.tg[t]);
    std::fill_n(taps.begin() + 24 * t + 16, 8, k.ttg[t]);
  }
  auto tap_g = [&](int t) -> const float* { return taps.data() + 24 * t; };
  std::vector<float> r0(area), r1(area), r2(area);
  std::vector<float> pad(stride + 2 * n);
  for (int y = 0; y < h; ++y) {
    const float* src = img.ptr<float>(y);
    std::fill_n(pad.begin(), n, src[0]);
    std::copy_n(src, w, pad.begin() + n);
    std::fill(pad.begin() + n + w, pad.end(), src[w - 1]);
    const float* p = pad.data() + n;
    const std::size_t row = static_cast<std::size_t>(y) * stride;
    for (int x = 0; x < stride; x += 8) {
      Vec8 a0 = LOAD8(tap_g(0)) * LOAD8(p + x);
      Vec8 a1{}, a2{};
      for (int t = 1; t <= n; ++t) {
        const Vec8 hi = LOAD8(p + x + t);
        const Vec8 lo = LOAD8(p + x - t);
        const Vec8 sum = hi + lo;
        a0 += LOAD8(tap_g(t)) * sum;
        a1 += LOAD8(tap_g(t) + 8) * (hi - lo);
        a2 += LOAD8(tap_g(t) + 16) * sum;
      }
      STORE8(r0.data() + row + x, a0);
      STORE8(r1.data() + row + x, a1);
      STORE8(r2.data() + row + x, a2);
    }
  }

  Expansion e{w, h, stride, std::make_unique_for_overwrite<float[]>(kLanes * area)};
  std::vector<std::size_t> above(n + 1), below(n + 1);
  const Vec8 cx = Vec8{} + k.ix;
  const Vec8 ca0 = Vec8{} + k.iaa0, ca3 = Vec8{} + k.iaa3, ca4 = Vec8{} + k.iaa4;
  const Vec8 cb0 = Vec8{} + k.ibb0, cb3 = Vec8{} + k.ibb3, cb4 = Vec8{} + k.ibb4;
  const Vec8 cxy = Vec8{} + 0.5f * k.ixy;
  for (int y = 0; y < h; ++y) {
    for (int t = 0; t <= n; ++t) {
      above[t] = static_cast<std::size_t>(std::min(y + t, h - 1)) * stride;
      below[t] = static_cast<std::size_t>(std::max(y - t, 0)) * stride;
    }
    for (int x = 0; x < stride; x += 8) {
      Vec8 m0 = LOAD8(tap_g(0)) * LOAD8(r0.data() + above[0] + x);
      Vec8 m1 = LOAD8(tap_g(0)) * LOAD8(r1.data() + above[0] + x);
      Vec8 m3 = LOAD8(tap_g(0)) * LOAD8(r2.data() + above[0] + x);
      Vec8 m2{}, m4{}, m5{};
      for (int t = 1; t <= n; ++t) {
        const Vec8 hi0 = LOAD8(r0.data() + above[t] + x);
        const Vec8 lo0 = LOAD8(r0.data() + below[t] + x);
        const Vec8 sum0 = hi0 + lo0;
        m0 += LOAD8(tap_g(t)) * sum0;
        m2 += LOAD8(tap_g(t) + 8) * (hi0 - lo0);
        m4 += LOAD8(tap_g(t) + 16) * sum0;
        const Vec8 hi1 = LOAD8(r1.data() + above[t] + x);
        const Vec8 lo1 = LOAD8(r1.data() + below[t] + x);
        m1 += LOAD8(tap_g(t)) * (hi1 + lo1);
        m5 += LOAD8(tap_g(t) + 8) * (hi1 - lo1);
        m3 += LOAD8(tap_g(t)) * (LOAD8(r2.data() + above[t] + x) + LOAD8(r2.data() + below[t] + x));
      }
      STORE8(e.row(kBx, y) + x, cx * m1);
      STORE8(e.row(kBy, y) + x, cx * m2);
      STORE8(e.row(kAxx, y) + x, ca0 * m0 + ca3 * m3 + ca4 * m4);
      STORE8(e.row(kAyy, y) + x, cb0 * m0 + cb3 * m3 + cb4 * m4);
      STORE8(e.row(kAxy, y) + x, cxy * m5);
    }
  }
  return e;
}

std::vector<float> border_weights(int n) {
  const int edge = static_cast<int>(kBorderRamp.size()) - 1;
  std::vector<float> out(n, 1.0f);
  for (int i = 0; i < n; ++i) {
    if (i < edge) out[i] = kBorderRamp[i];
    if (n - 1 - i < edge) out[i] = std::min(out[i], kBorderRamp[n - 1 - i]);
  }
  return out;
}


struct MatrixRow {
  float* __restrict g11;
  float* __restrict g12;
  float* __restrict g22;
  float* __restrict h1;
  float* __restrict h2;
};

// Where the displaced sample leaves the image, idx is 0 and inside is false.
struct Samples {
  Int8 idx;
  Int8 inside;
  Vec8 ax;
  Vec8 ay;
};

[[gnu::always_inline]] inline void locate(const Expansion& e, int x, int y, const float* dxr, const float* dyr,
                                          Samples& s) {
  const Vec8 sx = __builtin_convertvector((Int8{0, 1, 2, 3, 4, 5, 6, 7} + x), Vec8) + LOAD8(dxr + x);
  const Vec8 sy = (Vec8{} + static_cast<float>(y)) + LOAD8(dyr + x);
  Int8 x0 = __builtin_convertvector(sx, Int8);
  Int8 y0 = __builtin_convertvector(sy, Int8);
  x0 += sx < __builtin_convertvector(x0, Vec8);
  y0 += sy < __builtin_convertvector(y0, Vec8);
  using Uint8 = unsigned __attribute__((vector_size(32)));
  s.inside = (reinterpret_cast<Uint8&>(x0) < static_cast<unsigned>(e.width - 1)) &
             (reinterpret_cast<Uint8&>(y0) < static_cast<unsigned>(e.height - 1));
  s.idx = (y0 * e.stride + x0) & s.inside;
  s.ax = sx - __builtin_convertvector(x0, Vec8);
  s.ay = sy - __builtin_convertvector(y0, Vec8);
}

// Normal equations of eight pixels from own and bilinearly moved coefficients. Outside samples
// take the pixel's own coefficients, which makes the residual zero and keeps d as it is.
[[gnu::always_inline]] inline void block_equations(const Expansion& e1, int x, int y, const Samples& s,
                                                   const Vec8 (&corner)[kLanes][4], float wy, const float* wx,
                                                   const float* dxr, const float* dyr, MatrixRow m) {
  const Vec8 one = Vec8{} + 1.0f;
  const Vec8 w00 = (one - s.ax) * (one - s.ay);
  const Vec8 w10 = s.ax * (one - s.ay);
  const Vec8 w01 = (one - s.ax) * s.ay;
  const Vec8 w11 = s.ax * s.ay;
  Vec8 own[kLanes], moved[kLanes];
  for (int k = 0; k < kLanes; ++k) {
    own[k] = LOAD8(e1.row(k, y) + x);
    const Vec8 bil = w00 * corner[k][0] + w10 * corner[k][1] + w01 * corner[k][2] + w11 * corner[k][3];
    moved[k] = s.inside ? bil : own[k];
  }
  const Vec8 half = Vec8{} + 0.5f;
  const Vec8 p = half * (own[kAxx] + moved[kAxx]);
  const Vec8 q = half * (own[kAyy] + moved[kAyy]);
  const Vec8 r = half * (own[kAxy] + moved[kAxy]);
  const Vec8 dx = LOAD8(dxr + x);
  const Vec8 dy = LOAD8(dyr + x);
  const Vec8 bx = half * (own[kBx] - moved[kBx]) + p * dx + r * dy;
  const Vec8 by = half * (own[kBy] - moved[kBy]) + r * dx + q * dy;
  const Vec8 sw = (Vec8{} + wy) * LOAD8(wx + x);
  const Vec8 s2 = sw * sw;
  STORE8(m.g11 + x, (p * p + r * r) * s2);
  STORE8(m.g12 + x, r * (p + q) * s2);
  STORE8(m.g22 + x, (q * q + r * r) * s2);
  STORE8(m.h1 + x, (p * bx + r * by) * s2);
  STORE8(m.h2 + x, (r * bx + q * by) * s2);
}

// Rows of dxr, dyr, wx and the outputs are padded to e1.stride.
__attribute__((target("avx2"))) void normal_equations_avx2(const Expansion& e1, const Expansion& e2, int y, float wy,
                                                           const float* wx, const float* dxr, const float* dyr,
                                                           MatrixRow m) {
  const int step = e2.stride;
  for (int x = 0; x < e1.width; x += 8) {
    Samples s;
    locate(e2, x, y, dxr, dyr, s);
    Vec8 corner[kLanes][4];
    const __m256i i00 = reinterpret_cast<const __m256i&>(s.idx);
    const __m256i i10 = _mm256_add_epi32(i00, _mm256_set1_epi32(1));
    const __m256i i01 = _mm256_add_epi32(i00, _mm256_set1_epi32(step));
    const __m256i i11 = _mm256_add_epi32(i01, _mm256_set1_epi32(1));
    for (int k = 0; k < kLanes; ++k) {
      const float* base = e2.plane(k);
      corner[k][0] = reinterpret_cast<Vec8>(_mm256_i32gather_ps(base, i00, 4));
      corner[k][1] = reinterpret_cast<Vec8>(_mm256_i32gather_ps(base, i10, 4));
      corner[k][2] = reinterpret_cast<Vec8>(_mm256_i32gather_ps(base, i01, 4));
      corner[k][3] = reinterpret_cast<Vec8>(_mm256_i32gather_ps(base, i11, 4));
    }
    block_equations(e1, x, y, s, corner, wy, wx, dxr, dyr, m);
  }
}

void normal_equations_generic(const Expansion& e1, const Expansion& e2, int y, float wy, const float* wx,
                              const float* dxr, const float* dyr, MatrixRow m) {
  const int step = e2.stride;
  for (int x = 0; x < e1.width; x += 8) {
    Samples s;
    locate(e2, x, y, dxr, dyr, s);
    Vec8 corner[kLanes][4];
    for (int k = 0; k < kLanes; ++k) {
      const float* base = e2.plane(k);
      for (int i = 0; i < 8; ++i) {
        const float* a = base + s.idx[i];
        corner[k][0][i] = a[0];
        corner[k][1][i] = a[1];
        corner[k][2][i] = a[step];
        corner[k][3][i] = a[step + 1];
      }
    }
    block_equations(e1, x, y, s, corner, wy, wx, dxr, dyr, m);
  }
}

void normal_equations(const Expansion& e1, const Expansion& e2, int y, float wy, const float* wx, const float* dxr,
                      const float* dyr, MatrixRow m) {
  static const bool avx2 = __builtin_cpu_supports("avx2");
  if (avx2) {
    normal_equations_avx2(e1, e2, y, wy, wx, dxr, dyr, m);
  } else {
    normal_equations_generic(e1, e2, y, wy, wx, dxr, dyr, m);
  }
}

MOVDET_CLONES void slide_columns(int w, const float* __restrict add, const float* __restrict sub, double* __restrict col) {
  for (int x = 0; x < w; ++x) col[x] += static_cast<double>(add[x]) - static_cast<double>(sub[x]);
}

MOVDET_CLONES void add_columns(int w, const float* __restrict add, double* __restrict col) {
  for (int x = 0; x < w; ++x) col[x] += add[x];
}

// One refinement of the flow field. Per-pixel normal equations G d = h (g11 g12 g22 h1 h2)
// are averaged over a square window with replicated borders and solved. Rows stream through
// a ring buffer; a row of flow is overwritten only after every equation that reads it exists.
MOVDET_CLONES void refine_flow(const Expansion& e1, const Expansion& e2, int window, cv::Mat& fx, cv::Mat& fy) {
  constexpr int kCount = 5;
  const int w = e1.width;
  const int h = e1.height;
  const int rad = window / 2;
  const int slots = 2 * rad + 2;
  const int ws = e1.stride;
  std::vector<float> wx = border_weights(w);
  wx.resize(ws, 0.0f);
  const std::vector<float> wy = border_weights(h);
  std::vector<float> ring(static_cast<std::size_t>(slots) * kCount * ws);
  std::vector<float> dxr(ws, 0.0f), dyr(ws, 0.0f);
  int computed = -1;
  auto equations = [&](int j) -> const float* {
    j = std::clamp(j, 0, h - 1);
    float* slot = ring.data() + static_cast<std::size_t>(j % slots) * kCount * ws;
    while (computed < j) {
      ++computed;
      float* dst = ring.data() + static_cast<std::size_t>(computed % slots) * kCount * ws;
      std::copy_n(fx.ptr<float>(computed), w, dxr.begin());
      std::copy_n(fy.ptr<float>(computed), w, dyr.begin());
      normal_equations(e1, e2, computed, wy[computed], wx.data(), dxr.data(), dyr.data(),
                       MatrixRow{dst, dst + ws, dst + 2 * ws, dst + 3 * ws, dst + 4 * ws});
    }
    return slot;
  };

  const int span = w + 2 * rad;
  std::vector<double> cols(static_cast<std::size_t>(kCount) * span, 0.0);
  auto col = [&](int k) { return cols.data() + static_cast<std::size_t>(k) * span; };
  for (int i = -rad; i <= rad; ++i) {
    const float* eq = equations(i);
    for (int k = 0; k < kCount; ++k) add_columns(w, eq + k * ws, col(k) + rad);
  }
  const double norm = 1.0 / (static_cast<double>(window) * window);
  std::vector<double> avg(static_cast<std::size_t>(kCount) * w);
  for (int y = 0; y < h; ++y) {
    for (int k = 0; k < kCount; ++k) {
      double* padded = col(k);
      std::fill_n(padded, rad, padded[rad]);
      std::fill_n(padded + rad + w, rad, padded[rad + w - 1]);
    }
    std::array<double, kCount> acc{};
    for (int k = 0; k < kCount; ++k) {
      for (int i = 0; i < 2 * rad; ++i) acc[k] += col(k)[i];
    }
    for (int x = 0; x < w; ++x) {
      for (int k = 0; k < kCount; ++k) {
        const double* c = col(k);
        acc[k] += c[x + 2 * rad];
        avg[static_cast<std::size_t>(k) * w + x] = acc[k] * norm;
        acc[k] -= c[x];
      }
    }
    // The rows entering and leaving the window must exist before this row of flow changes.
    const float* enter = equations(y + rad + 1);
    const float* leave = equations(y - rad);
    float* dx = fx.ptr<float>(y);
    float* dy = fy.ptr<float>(y);
    for (int x = 0; x < w; ++x) {
      const float g11 = static_cast<float>(avg[x]);
      const float g12 = static_cast<float>(avg[w + x]);
      const float g22 = static_cast<float>(avg[2 * w + x]);
      const float h1 = static_cast<float>(avg[3 * w + x]);
      const float h2 = static_cast<float>(avg[4 * w + x]);
      const float inv = 1.0f / (g11 * g22 - g12 * g12 + kSolveRegularizer);
      dx[x] = (g22 * h1 - g12 * h2) * inv;
      dy[x] = (g11 * h2 - g12 * h1) * inv;
    }
    if (y + 1 < h) {
      for (int k = 0; k < kCount; ++k) slide_columns(w, enter + k * ws, leave + k * ws, col(k) + rad);
    }
  }
}

cv::Mat level_image(const cv::Mat& img, double scale, cv::Size size) {
  if (size == img.size()) return img;
  const double sigma = (1.0 / scale - 1.0) * 0.5;
  const int ksize = std::max(3, static_cast<int>(std::lround(sigma * 5)) | 1);
  cv::Mat blurred;
  cv::Mat out;
  cv::GaussianBlur(img, blurred, cv::Size(ksize, ksize), sigma, sigma, cv::BORDER_REPLICATE);
  cv::resize(blurred, out, size, 0, 0, cv::INTER_LINEAR);
  return out;
}

FlowField estimate(const cv::Mat& a, const cv::Mat& b, const FlowParams& params) {
  if (!(params.pyr_scale > 0 && params.pyr_scale < 1) || params.levels < 1 || params.window < 1 ||
      params.iterations < 1 || params.poly_n < 1 || !(params.poly_sigma > 0)) {
    throw Error("estimate_dense_flow: invalid parameters");
  }
  const Kernel kernel = make_kernel(params.poly_n, params.poly_sigma);

  int top = 0;
  for (int k = 1; k < params.levels; ++k) {
    const double s = std::pow(params.pyr_scale, k);
    if (std::lround(a.cols * s) < kMinLevelSide || std::lround(a.rows * s) < kMinLevelSide) break;
    top = k;
  }

  cv::Mat fx;
  cv::Mat fy;
  for (int k = top; k >= 0; --k) {
    const double scale = std::pow(params.pyr_scale, k);
    const cv::Size size(static_cast<int>(std::lround(a.cols * scale)), static_cast<int>(std::lround(a.rows * scale)));
    if (fx.empty()) {
      fx = cv::Mat::zeros(size, CV_32F);
      fy = cv::Mat::zeros(size, CV_32F);
    } else {
      cv::Mat ux;
      cv::Mat uy;
      cv::resize(fx, ux, size, 0, 0, cv::INTER_LINEAR);
      cv::resize(fy, uy, size, 0, 0, cv::INTER_LINEAR);
      fx = ux * (1.0 / params.pyr_scale);
      fy = uy * (1.0 / params.pyr_scale);
    }
    const Expansion e1 = expand(level_image(a, scale, size), kernel);
    const Expansion e2 = expand(level_image(b, scale, size), kernel);
    for (int it = 0; it < params.iterations; ++it) refine_flow(e1, e2, params.window | 1, fx, fy);
  }

  FlowField out{ModelPlane(a.cols, a.rows), ModelPlane(a.cols, a.rows)};
  for (int y = 0; y < a.rows; ++y) {
    std::copy_n(fx.ptr<float>(y), a.cols, out.dx.row(y));
    std::copy_n(fy.ptr<float>(y), a.cols, out.dy.row(y));
  }
  return out;
}

template <typename T>
cv::Mat to_float(const Plane<T>& p) {
  cv::Mat out(p.height(), p.width(), CV_32F);
  for (int y = 0; y < p.height(); ++y) {
    const T* src = p.row(y);
    float* dst = out.ptr<float>(y);
    for (int x = 0; x < p.width(); ++x) dst[x] = static_cast<float>(src[x]);
  }
  return out;
}

template <typename A, typename B>
FlowField estimate_planes(const Plane<A>& a, const Plane<B>& b, const FlowParams& params) {
  if (a.empty() || !a.same_dims(b)) {
    throw DimensionError("estimate_dense_flow: planes differ in size");
  }
  return estimate(to_float(a), to_float(b), params);
}

}  // namespace

FlowField estimate_dense_flow(const ImagePlane& a, const ImagePlane& b, const FlowParams& params) {
  return estimate_planes(a, b, params);
}

FlowField estimate_dense_flow(const ImagePlane& a, const ModelPlane& b, const FlowParams& params) {
  return estimate_planes(a, b, params);
}

ModelPlane flow_magnitude(const FlowField& flow) {
  if (flow.dx.empty() || !flow.dx.same_dims(flow.dy)) {
    throw DimensionError("flow_magnitude: component planes differ in size");
  }
  ModelPlane mag(flow.dx.width(), flow.dx.height());
  auto dx = flow.dx.values();
  auto dy = flow.dy.values();
  auto m = mag.values();
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::sqrt(dx[i] * dx[i] + dy[i] * dy[i]);
  return mag;
}

ModelPlane magnitude_weights(const ModelPlane& mag, double t_mag, double w_cap) {
  if (!(t_mag > 0.0)) throw Error("magnitude_weights: t_mag must be positive");
  if (!(w_cap >= 1.0)) throw Error("magnitude_weights: w_cap must be >= 1");
  ModelPlane w(mag.width(), mag.height(), 1.0f);
  auto in = mag.values();
  auto out = w.values();
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] > t_mag) out[i] = static_cast<float>(std::min(in[i] / t_mag, w_cap));
  }
  return w;
}

}  // namespace movdet
