#include "movdet/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <tuple>

namespace movdet {

void PipelineConfig::validate() const {
  if (grid_step < 1) throw ConfigError("grid_step must be >= 1");
  if (tracker.window < 3 || tracker.levels < 1 || tracker.max_iterations < 1 || !(tracker.epsilon > 0)) {
    throw ConfigError("tracker parameters out of range");
  }
  if (!(ransac.reproj_threshold > 0) || ransac.max_iterations < 1 || !(ransac.confidence > 0) ||
      ransac.confidence > 1) {
    throw ConfigError("RANSAC parameters out of range");
  }
  if (!(flow.pyr_scale > 0 && flow.pyr_scale < 1) || flow.levels < 1 || flow.window < 3 || flow.iterations < 1 ||
      flow.poly_n < 1 || !(flow.poly_sigma > 0)) {
    throw ConfigError("flow parameters out of range");
  }
  foreground.validate();
  if (age_max < 1) throw ConfigError("age_max must be >= 1");
  if (detection.morph_radius < 1 || detection.min_area < 1 || detection.margin < 0) {
    throw ConfigError("detection parameters out of range");
  }
}

std::string_view stage_name(Stage stage) noexcept {
  switch (stage) {
    case Stage::color: return "color";
    case Stage::tracking: return "tracking";
    case Stage::homography: return "homography";
    case Stage::model: return "model";
    case Stage::difference: return "difference";
    case Stage::flow: return "flow";
    case Stage::threshold: return "threshold";
    case Stage::boxes: return "boxes";
    case Stage::count_: break;
  }
  return "?";
}

double StageTimings::total() const noexcept { return std::accumulate(seconds.begin(), seconds.end(), 0.0); }

PipelineState::PipelineState(PipelineConfig config) : config_(std::move(config)) { config_.validate(); }

const BackgroundModel& PipelineState::model() const {
  if (!model_) throw Error("pipeline has not processed a frame yet");
  return *model_;
}

const BackgroundModel& PipelineState::warped_previous_model() const {
  if (!warped_prev_) throw Error("pipeline has not processed two frames yet");
  return *warped_prev_;
}

std::vector<BoundingBox> extract_boxes(const BinaryMask& mask, int min_area) {
  if (min_area < 1) throw Error("extract_boxes: min_area must be >= 1");
  std::vector<BoundingBox> boxes;
  for (const Region& r : connected_components(mask)) {
    if (r.pixel_count > min_area) boxes.push_back(r.bbox);
  }
  return boxes;
}

std::vector<BoundingBox> merge_intersecting(std::vector<BoundingBox> boxes) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      for (std::size_t j = i + 1; j < boxes.size();) {
        if (intersects(boxes[i], boxes[j])) {
          boxes[i] = enclosing(boxes[i], boxes[j]);
          boxes.erase(boxes.begin() + static_cast<std::ptrdiff_t>(j));
          changed = true;
        } else {
          ++j;
        }
      }
    }
  }
  std::sort(boxes.begin(), boxes.end(), [](const BoundingBox& a, const BoundingBox& b) {
    return std::tie(a.y, a.x, a.h, a.w) < std::tie(b.y, b.x, b.h, b.w);
  });
  return boxes;
}

std::vector<BoundingBox> inflate_and_merge(std::vector<BoundingBox> boxes, int margin, int frame_width,
                                           int frame_height) {
  if (margin < 0) throw Error("inflate_and_merge: margin must be >= 0");
  std::vector<BoundingBox> grown;
  grown.reserve(boxes.size());
  for (const auto& b : boxes) {
    const BoundingBox c =
        clip({b.x - margin, b.y - margin, b.w + 2 * margin, b.h + 2 * margin}, frame_width, frame_height);
    if (c.w > 0 && c.h > 0) grown.push_back(c);
  }
  return merge_intersecting(std::move(grown));
}

namespace {

class StageClock {
 public:
  explicit StageClock(StageTimings* timings) : timings_(timings), last_(Clock::now()) {}

  void lap(Stage stage) {
    if (!timings_) return;
    const auto now = Clock::now();
    timings_->seconds[static_cast<std::size_t>(stage)] += std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }

 private:
  using Clock = std::chrono::steady_clock;
  StageTimings* timings_;
  Clock::time_point last_;
};

}  // namespace

FrameDetections process_frame(PipelineState& state, const RgbImage& frame, StageTimings* timings) {
  const PipelineConfig& cfg = state.config_;
  if (state.initialized() && (frame.width != state.width_ || frame.height != state.height_)) {
    throw DimensionError("process_frame: frame size changed mid-sequence");
  }
  StageClock clock(timings);
  FrameDetections result;
  result.frame_index = state.frame_index_;

  SvPlanes sv = rgb_to_sv(frame);
  clock.lap(Stage::color);

  if (!state.initialized()) {
    state.width_ = frame.width;
    state.height_ = frame.height;
    state.model_ = init_model(sv.s, sv.v);
    state.prev_pyramid_ = ImagePyramid(sv.v, cfg.tracker);
    state.grid_ = select_grid_points(frame.width, frame.height, cfg.grid_step);
    clock.lap(Stage::tracking);
    result.diagnostics.homography_ok = true;
    result.diagnostics.t_a = adaptive_threshold(cfg.foreground, 0.0);
    ++state.frame_index_;
    if (timings) ++timings->frames;
    return result;
  }

  ImagePyramid pyramid(sv.v, cfg.tracker);
  const auto tracks = track_points(state.prev_pyramid_, pyramid, state.grid_, cfg.tracker);
  clock.lap(Stage::tracking);

  FrameDiagnostics& diag = result.diagnostics;
  try {
    RansacParams ransac = cfg.ransac;
    ransac.seed = cfg.ransac.seed + static_cast<std::uint64_t>(state.frame_index_);
    RegistrationResult reg = estimate_homography(tracks, ransac);
    diag.a_bg = background_motion(tracks, reg.inlier_flags);
    diag.inlier_ratio = reg.inlier_ratio;
    diag.h = reg.h;
    diag.homography_ok = reg.h.invertible();
  } catch (const InsufficientPointsError&) {
    diag.homography_ok = false;
  } catch (const DegenerateGeometryError&) {
    diag.homography_ok = false;
  } catch (const UndefinedMotionError&) {
    diag.homography_ok = false;
  }
  if (!diag.homography_ok) {
    diag.h = Homography::identity();
    diag.a_bg = 0.0;
  }
  clock.lap(Stage::homography);

  BackgroundModel warped = warp_model(*state.model_, diag.h);
  state.model_ = update_model(warped, sv.s, sv.v, cfg.age_max);
  state.warped_prev_ = std::move(warped);
  const BackgroundModel& model = *state.model_;
  const BackgroundModel& prev = *state.warped_prev_;
  clock.lap(Stage::model);

  ModelPlane d = fuse_sv(neighborhood_difference(sv.s, prev.mu_s), neighborhood_difference(sv.v, prev.mu_v));
  clock.lap(Stage::difference);

  const FlowField flow = estimate_dense_flow(sv.v, model.mu_v, cfg.flow);
  ModelPlane magnitude = flow_magnitude(flow);
  const ModelPlane weights = magnitude_weights(magnitude, cfg.foreground.t_mag, cfg.foreground.w_cap);
  clock.lap(Stage::flow);

  ModelPlane d_w = weighted_difference(d, weights);
  diag.t_a = adaptive_threshold(cfg.foreground, diag.a_bg);
  BinaryMask raw = threshold_mask(d_w, diag.t_a, model.age, cfg.foreground.t_age);
  clock.lap(Stage::threshold);

  BinaryMask opened = morph_open(raw, cfg.detection.morph_radius);
  result.boxes = inflate_and_merge(extract_boxes(opened, cfg.detection.min_area), cfg.detection.margin,
                                   frame.width, frame.height);
  clock.lap(Stage::boxes);

  if (state.capture_debug_) {
    result.debug = FrameDebug{std::move(d), std::move(d_w), std::move(magnitude), std::move(raw), std::move(opened)};
  }
  state.prev_pyramid_ = std::move(pyramid);
  ++state.frame_index_;
  if (timings) ++timings->frames;
  return result;
}

}  // namespace movdet
