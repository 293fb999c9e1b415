#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "movdet/image.hpp"
#include "movdet/sequence_io.hpp"

namespace movdet {

/// A rectangle that brightens (or darkens) whatever background lies under it
/// by `contrast` levels per channel, moving at constant velocity in frame
/// coordinates.
struct SpriteSpec {
  double x = 0.0;
  double y = 0.0;
  int w = 20;
  int h = 20;
  double vx = 0.0;
  double vy = 0.0;
  int contrast = 40;

  bool operator==(const SpriteSpec&) const = default;
};

/// Per-frame camera motion relative to the scene, applied cumulatively about the
/// frame centre.
struct CameraPath {
  double pan_x = 0.0;        // scene pixels per frame
  double pan_y = 0.0;
  double rotation_deg = 0.0; // degrees per frame
  double zoom = 1.0;         // scale factor per frame

  bool operator==(const CameraPath&) const = default;
};

struct SynthConfig {
  int width = 640;
  int height = 360;
  int frame_count = 200;
  std::uint64_t seed = 1;
  CameraPath camera;
  std::vector<SpriteSpec> sprites;
  double noise_sigma = 0.0;

  /// Throws ConfigError, e.g. when a sprite would leave the frame.
  void validate() const;
  bool operator==(const SynthConfig&) const = default;
};

/// Renders frames of a synthetic sequence on demand. The background is seeded
/// value noise rasterized once onto a canvas covering the whole camera path.
class SynthRenderer {
 public:
  explicit SynthRenderer(SynthConfig config);

  const SynthConfig& config() const noexcept { return config_; }
  RgbImage frame(int t) const;
  FrameAnnotation truth(int t) const;
  /// Maps frame-t pixel coordinates to scene coordinates.
  Homography camera(int t) const;
  /// True camera-induced motion from frame t - 1 to frame t.
  Homography frame_motion(int t) const;

 private:
  SynthConfig config_;
  double origin_x_ = 0.0;
  double origin_y_ = 0.0;
  int canvas_w_ = 0;
  int canvas_h_ = 0;
  std::vector<float> canvas_;  // interleaved RGB
};

struct SyntheticSequence {
  std::vector<RgbImage> frames;
  std::vector<FrameAnnotation> truth;
};

SyntheticSequence synth_generate(const SynthConfig& config);

/// Flat `key = value` text; `sprite = x y w h vx vy contrast` may repeat.
SynthConfig parse_synth_config(std::string_view text);
SynthConfig load_synth_config(const std::filesystem::path& path);
std::string format_synth_config(const SynthConfig& config);

/// images/frame_NNNNN.png plus annotations/frame_NNNNN.txt.
void write_synth_sequence(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace movdet
