#include "movdet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>

#include "movdet/config.hpp"

namespace movdet {

namespace {

constexpr long long kMaxCanvasPixels = 1LL << 26;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double lattice(std::uint64_t seed, long long ix, long long iy) {
  const std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(ix) * 0x632BE59BD9B4E019ULL ^
                                                       static_cast<std::uint64_t>(iy)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double value_noise(std::uint64_t seed, double u, double v, double cell) {
  const double fu = u / cell;
  const double fv = v / cell;
  const double x0 = std::floor(fu);
  const double y0 = std::floor(fv);
  double tx = fu - x0;
  double ty = fv - y0;
  tx = tx * tx * (3.0 - 2.0 * tx);
  ty = ty * ty * (3.0 - 2.0 * ty);
  const auto ix = static_cast<long long>(x0);
  const auto iy = static_cast<long long>(y0);
  const double a = lattice(seed, ix, iy);
  const double b = lattice(seed, ix + 1, iy);
  const double c = lattice(seed, ix, iy + 1);
  const double d = lattice(seed, ix + 1, iy + 1);
  return (1 - ty) * ((1 - tx) * a + tx * b) + ty * ((1 - tx) * c + tx * d);
}

// Luminance in [40, 200] from four octaves, tinted per channel.
std::array<float, 3> texture(std::uint64_t seed, double u, double v) {
  static constexpr double cells[] = {32.0, 16.0, 8.0, 4.0};
  static constexpr double weights[] = {0.4, 0.3, 0.2, 0.1};
  double lum = 0.0;
  for (int o = 0; o < 4; ++o) lum += weights[o] * value_noise(splitmix64(seed + 11 * o), u, v, cells[o]);
  std::array<float, 3> rgb{};
  for (int ch = 0; ch < 3; ++ch) {
    const double tint = value_noise(splitmix64(seed + 1000 + ch), u, v, 64.0);
    rgb[ch] = static_cast<float>(40.0 + 160.0 * (0.8 * lum + 0.2 * tint));
  }
  return rgb;
}

int sprite_x(const SpriteSpec& s, int t) { return static_cast<int>(std::lround(s.x + s.vx * t)); }
int sprite_y(const SpriteSpec& s, int t) { return static_cast<int>(std::lround(s.y + s.vy * t)); }

}  // namespace

void SynthConfig::validate() const {
  if (width <= 0 || height <= 0) throw ConfigError("synth: width and height must be positive");
  if (frame_count < 1) throw ConfigError("synth: frames must be >= 1");
  if (!(camera.zoom > 0.0)) throw ConfigError("synth: zoom must be positive");
  if (!(noise_sigma >= 0.0)) throw ConfigError("synth: noise_sigma must be >= 0");
  for (std::size_t i = 0; i < sprites.size(); ++i) {
    const auto& s = sprites[i];
    if (s.w <= 0 || s.h <= 0) throw ConfigError("synth: sprite size must be positive");
    for (int t : {0, frame_count - 1}) {
      const int x = sprite_x(s, t);
      const int y = sprite_y(s, t);
      if (x < 0 || y < 0 || x + s.w > width || y + s.h > height) {
        throw ConfigError("synth: sprite " + std::to_string(i) + " leaves the frame by frame " + std::to_string(t));
      }
    }
  }
}

SynthRenderer::SynthRenderer(SynthConfig config) : config_(std::move(config)) {
  config_.validate();
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  const double corners[4][2] = {
      {0, 0}, {config_.width - 1.0, 0}, {0, config_.height - 1.0}, {config_.width - 1.0, config_.height - 1.0}};
  for (int t = 0; t < config_.frame_count; ++t) {
    const Homography g = camera(t);
    for (const auto& c : corners) {
      const Point2d p = g.apply({c[0], c[1]});
      x0 = std::min(x0, p.x);
      y0 = std::min(y0, p.y);
      x1 = std::max(x1, p.x);
      y1 = std::max(y1, p.y);
    }
  }
  origin_x_ = std::floor(x0) - 2.0;
  origin_y_ = std::floor(y0) - 2.0;
  const double cw = std::ceil(x1) + 3.0 - origin_x_;
  const double ch = std::ceil(y1) + 3.0 - origin_y_;
  if (cw * ch > static_cast<double>(kMaxCanvasPixels)) {
    throw ConfigError("synth: camera path covers too large a scene");
  }
  canvas_w_ = static_cast<int>(cw);
  canvas_h_ = static_cast<int>(ch);
  canvas_.resize(static_cast<std::size_t>(canvas_w_) * canvas_h_ * 3);
  for (int y = 0; y < canvas_h_; ++y) {
    for (int x = 0; x < canvas_w_; ++x) {
      const auto rgb = texture(config_.seed, origin_x_ + x, origin_y_ + y);
      std::copy(rgb.begin(), rgb.end(), canvas_.begin() + (static_cast<std::ptrdiff_t>(y) * canvas_w_ + x) * 3);
    }
  }
}

Homography SynthRenderer::camera(int t) const {
  const auto& cam = config_.camera;
  const double cx = (config_.width - 1) * 0.5;
  const double cy = (config_.height - 1) * 0.5;
  const double theta = cam.rotation_deg * t * std::numbers::pi / 180.0;
  const double s = std::pow(cam.zoom, t);
  const double c = s * std::cos(theta);
  const double sn = s * std::sin(theta);
  // scene = centre + s R (p - centre) + pan * t
  return Homography(std::array<double, 9>{c, -sn, cx - c * cx + sn * cy + cam.pan_x * t, sn, c,
                                          cy - sn * cx - c * cy + cam.pan_y * t, 0, 0, 1});
}

Homography SynthRenderer::frame_motion(int t) const { return camera(t).inverse() * camera(t - 1); }

RgbImage SynthRenderer::frame(int t) const {
  if (t < 0 || t >= config_.frame_count) throw Error("synth: frame index out of range");
  const int w = config_.width;
  const int h = config_.height;
  RgbImage img(w, h);
  const Homography cam = camera(t);
  const auto& m = cam.matrix();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = m[0] * x + m[1] * y + m[2] - origin_x_;
      const double v = m[3] * x + m[4] * y + m[5] - origin_y_;
      const int u0 = static_cast<int>(std::floor(u));
      const int v0 = static_cast<int>(std::floor(v));
      const double fu = u - u0;
      const double fv = v - v0;
      const float* p00 = &canvas_[(static_cast<std::size_t>(v0) * canvas_w_ + u0) * 3];
      const float* p01 = p00 + 3;
      const float* p10 = p00 + static_cast<std::size_t>(canvas_w_) * 3;
      const float* p11 = p10 + 3;
      std::uint8_t* out = img.pixel(x, y);
      for (int ch = 0; ch < 3; ++ch) {
        const double top = (1 - fu) * p00[ch] + fu * p01[ch];
        const double bottom = (1 - fu) * p10[ch] + fu * p11[ch];
        out[ch] = static_cast<std::uint8_t>(std::clamp(std::lround((1 - fv) * top + fv * bottom), 0L, 255L));
      }
    }
  }
  for (const auto& s : config_.sprites) {
    const int sx = sprite_x(s, t);
    const int sy = sprite_y(s, t);
    for (int y = sy; y < sy + s.h; ++y) {
      for (int x = sx; x < sx + s.w; ++x) {
        std::uint8_t* p = img.pixel(x, y);
        for (int ch = 0; ch < 3; ++ch) p[ch] = static_cast<std::uint8_t>(std::clamp(p[ch] + s.contrast, 0, 255));
      }
    }
  }
  if (config_.noise_sigma > 0.0) {
    std::mt19937_64 rng(splitmix64(config_.seed ^ (0xA5A5A5A5ULL + static_cast<std::uint64_t>(t))));
    std::normal_distribution<double> noise(0.0, config_.noise_sigma);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(std::clamp(std::lround(v + noise(rng)), 0L, 255L));
  }
  return img;
}

FrameAnnotation SynthRenderer::truth(int t) const {
  FrameAnnotation a{t, {}};
  for (const auto& s : config_.sprites) a.boxes.push_back({sprite_x(s, t), sprite_y(s, t), s.w, s.h});
  return a;
}

SyntheticSequence synth_generate(const SynthConfig& config) {
  const SynthRenderer renderer(config);
  SyntheticSequence seq;
  seq.frames.reserve(static_cast<std::size_t>(config.frame_count));
  for (int t = 0; t < config.frame_count; ++t) {
    seq.frames.push_back(renderer.frame(t));
    seq.truth.push_back(renderer.truth(t));
  }
  return seq;
}

SynthConfig parse_synth_config(std::string_view text) {
  SynthConfig c;
  for (const auto& kv : parse_key_values(text)) {
    try {
      const std::string_view v = kv.value;
      if (kv.key == "width") c.width = static_cast<int>(parse_integer(v, kv.key));
      else if (kv.key == "height") c.height = static_cast<int>(parse_integer(v, kv.key));
      else if (kv.key == "frames") c.frame_count = static_cast<int>(parse_integer(v, kv.key));
      else if (kv.key == "seed") c.seed = static_cast<std::uint64_t>(parse_integer(v, kv.key));
      else if (kv.key == "pan_x") c.camera.pan_x = parse_double(v, kv.key);
      else if (kv.key == "pan_y") c.camera.pan_y = parse_double(v, kv.key);
      else if (kv.key == "rotation_deg") c.camera.rotation_deg = parse_double(v, kv.key);
      else if (kv.key == "zoom") c.camera.zoom = parse_double(v, kv.key);
      else if (kv.key == "noise_sigma") c.noise_sigma = parse_double(v, kv.key);
      else if (kv.key == "sprite") {
        std::istringstream in(kv.value);
        std::vector<std::string> tok{std::istream_iterator<std::string>(in), {}};
        if (tok.size() != 7) throw ConfigError("sprite needs 'x y w h vx vy contrast'");
        SpriteSpec s;
        s.x = parse_double(tok[0], "sprite x");
        s.y = parse_double(tok[1], "sprite y");
        s.w = static_cast<int>(parse_integer(tok[2], "sprite w"));
        s.h = static_cast<int>(parse_integer(tok[3], "sprite h"));
        s.vx = parse_double(tok[4], "sprite vx");
        s.vy = parse_double(tok[5], "sprite vy");
        s.contrast = static_cast<int>(parse_integer(tok[6], "sprite contrast"));
        c.sprites.push_back(s);
      } else {
        throw ConfigError("unknown synth key '" + kv.key + "'");
      }
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), kv.line);
    }
  }
  return c;
}

SynthConfig load_synth_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open synth config: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_synth_config(buf.str());
}

std::string format_synth_config(const SynthConfig& c) {
  std::string out;
  out += "width = " + std::to_string(c.width) + '\n';
  out += "height = " + std::to_string(c.height) + '\n';
  out += "frames = " + std::to_string(c.frame_count) + '\n';
  out += "seed = " + std::to_string(c.seed) + '\n';
  out += "pan_x = " + format_double(c.camera.pan_x) + '\n';
  out += "pan_y = " + format_double(c.camera.pan_y) + '\n';
  out += "rotation_deg = " + format_double(c.camera.rotation_deg) + '\n';
  out += "zoom = " + format_double(c.camera.zoom) + '\n';
  out += "noise_sigma = " + format_double(c.noise_sigma) + '\n';
  for (const auto& s : c.sprites) {
    out += "sprite = " + format_double(s.x) + ' ' + format_double(s.y) + ' ' + std::to_string(s.w) + ' ' +
           std::to_string(s.h) + ' ' + format_double(s.vx) + ' ' + format_double(s.vy) + ' ' +
           std::to_string(s.contrast) + '\n';
  }
  return out;
}

void write_synth_sequence(const SynthConfig& config, const std::filesystem::path& out_dir) {
  const SynthRenderer renderer(config);
  for (int t = 0; t < config.frame_count; ++t) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "frame_%05d", t);
    write_frame(out_dir / "images" / (std::string(stem) + ".png"), renderer.frame(t));
    write_annotations(out_dir / "annotations" / (std::string(stem) + ".txt"), renderer.truth(t).boxes);
  }
}

}  // namespace movdet
