#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <opencv2/core.hpp>

#include "movdet/image.hpp"

namespace movdet {

struct TrackerParams {
  int window = 21;         // side of the square LK window
  int levels = 3;          // pyramid levels including the base image
  int max_iterations = 30;
  double epsilon = 0.01;   // convergence, pixels
  double min_eigen = 1e-4; // normalized minimum eigenvalue of the gradient matrix
};

struct RansacParams {
  double reproj_threshold = 1.0;
  int max_iterations = 500;
  double confidence = 0.995;  // adaptive early stop; 1.0 always runs max_iterations
  std::uint64_t seed = 0;
};

struct PointCorrespondence {
  Point2d prev;
  Point2d curr;
  bool tracked = false;
  double residual = 0.0;
};

struct RegistrationResult {
  Homography h;
  std::vector<std::uint8_t> inlier_flags;
  double a_bg = 0.0;
  double inlier_ratio = 0.0;
};

/// Centers of every complete step x step cell of the frame, row-major.
std::vector<Point2d> select_grid_points(int width, int height, int step);

/// Gaussian pyramid with derivative levels, ready for LK tracking. Building it
/// once per frame lets the pipeline reuse the current pyramid as the next
/// frame's previous one.
class ImagePyramid {
 public:
  ImagePyramid() = default;
  ImagePyramid(const ImagePlane& base, const TrackerParams& params);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return levels_.empty(); }
  const std::vector<cv::Mat>& levels() const noexcept { return levels_; }

 private:
  int width_ = 0;
  int height_ = 0;
  cv::Mat base_;
  std::vector<cv::Mat> levels_;
};

/// Pyramidal Lucas-Kanade. A point is untracked when its gradient matrix is
/// near-singular, the iteration fails, or it ends outside the frame.
std::vector<PointCorrespondence> track_points(const ImagePyramid& prev, const ImagePyramid& curr,
                                              std::span<const Point2d> points, const TrackerParams& params);

/// Hartley-normalized DLT least-squares fit over all given pairs (>= 4).
Homography fit_homography(std::span<const Point2d> src, std::span<const Point2d> dst);

double reprojection_error(const Homography& h, const Point2d& src, const Point2d& dst) noexcept;

/// RANSAC over 4-point DLT samples, refit on the consensus set. The result's
/// a_bg is left at 0; see background_motion.
RegistrationResult estimate_homography(std::span<const PointCorrespondence> correspondences,
                                       const RansacParams& params);

/// Mean displacement norm over inlier correspondences.
double background_motion(std::span<const PointCorrespondence> correspondences,
                         std::span<const std::uint8_t> inlier_flags);

}  // namespace movdet
