#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include "movdet/background_model.hpp"
#include "movdet/dense_flow.hpp"
#include "movdet/foreground.hpp"
#include "movdet/image.hpp"
#include "movdet/registration.hpp"

namespace movdet {

struct DetectionParams {
  int morph_radius = 1;
  int min_area = 5;  // components must be strictly larger
  int margin = 5;    // box inflation on every side
};

struct PipelineConfig {
  int grid_step = 32;
  TrackerParams tracker;
  RansacParams ransac;
  FlowParams flow;
  ForegroundParams foreground;
  int age_max = 30;
  DetectionParams detection;

  void validate() const;
};

struct FrameDiagnostics {
  double a_bg = 0.0;
  double inlier_ratio = 0.0;
  double t_a = 0.0;
  bool homography_ok = false;
  Homography h;
};

/// Intermediate planes of one frame, captured on request.
struct FrameDebug {
  ModelPlane d;
  ModelPlane d_w;
  ModelPlane magnitude;
  BinaryMask raw_mask;
  BinaryMask mask;
};

struct FrameDetections {
  int frame_index = 0;
  std::vector<BoundingBox> boxes;
  FrameDiagnostics diagnostics;
  std::optional<FrameDebug> debug;
};

enum class Stage : std::size_t {
  color,
  tracking,
  homography,
  model,
  difference,
  flow,
  threshold,
  boxes,
  count_,
};

inline constexpr std::size_t kStageCount = static_cast<std::size_t>(Stage::count_);
std::string_view stage_name(Stage stage) noexcept;

/// Wall-clock seconds accumulated per stage over any number of frames.
struct StageTimings {
  std::array<double, kStageCount> seconds{};
  int frames = 0;

  double total() const noexcept;
};

/// Everything threaded from one frame to the next. One state per stream.
class PipelineState {
 public:
  explicit PipelineState(PipelineConfig config = {});

  const PipelineConfig& config() const noexcept { return config_; }
  /// Frames processed so far.
  int frame_index() const noexcept { return frame_index_; }
  bool initialized() const noexcept { return model_.has_value(); }
  const BackgroundModel& model() const;
  /// Model after warping, before this frame's update; what the difference
  /// image was computed against.
  const BackgroundModel& warped_previous_model() const;

  void set_capture_debug(bool on) noexcept { capture_debug_ = on; }

 private:
  friend FrameDetections process_frame(PipelineState&, const RgbImage&, StageTimings*);

  PipelineConfig config_;
  int frame_index_ = 0;
  int width_ = 0;
  int height_ = 0;
  std::optional<BackgroundModel> model_;
  std::optional<BackgroundModel> warped_prev_;
  ImagePyramid prev_pyramid_;
  std::vector<Point2d> grid_;
  bool capture_debug_ = false;
};

/// Components larger than min_area, as tight boxes.
std::vector<BoundingBox> extract_boxes(const BinaryMask& mask, int min_area);

/// Grow each box by margin (clipped to the frame), then replace every group of
/// intersecting boxes by its enclosing box until no two boxes intersect.
std::vector<BoundingBox> inflate_and_merge(std::vector<BoundingBox> boxes, int margin, int frame_width,
                                           int frame_height);

/// Merge step alone, without inflation or clipping.
std::vector<BoundingBox> merge_intersecting(std::vector<BoundingBox> boxes);

/// Run one frame through the whole detector and advance the state. On
/// registration failure the frame is processed with the identity transform and
/// diagnostics.homography_ok is false.
FrameDetections process_frame(PipelineState& state, const RgbImage& frame, StageTimings* timings = nullptr);

}  // namespace movdet
