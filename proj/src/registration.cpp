#include "movdet/registration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>
#include <opencv2/video/tracking.hpp>

namespace movdet {

std::vector<Point2d> select_grid_points(int width, int height, int step) {
  if (step < 1) throw Error("select_grid_points: step must be >= 1");
  std::vector<Point2d> points;
  if (width <= 0 || height <= 0) return points;
  const int cols = width / step;
  const int rows = height / step;
  points.reserve(static_cast<std::size_t>(cols) * rows);
  const double half = step * 0.5;
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < cols; ++i) {
      points.push_back({half + i * step, half + j * step});
    }
  }
  return points;
}

ImagePyramid::ImagePyramid(const ImagePlane& base, const TrackerParams& params)
    : width_(base.width()), height_(base.height()) {
  if (base.empty()) throw DimensionError("ImagePyramid: empty base plane");
  base_ = cv::Mat(height_, width_, CV_8UC1);
  std::copy(base.values().begin(), base.values().end(), base_.ptr<std::uint8_t>());
  cv::buildOpticalFlowPyramid(base_, levels_, cv::Size(params.window, params.window),
                              std::max(0, params.levels - 1), true);
}

std::vector<PointCorrespondence> track_points(const ImagePyramid& prev, const ImagePyramid& curr,
                                              std::span<const Point2d> points, const TrackerParams& params) {
  if (prev.empty() || curr.empty() || prev.width() != curr.width() || prev.height() != curr.height()) {
    throw DimensionError("track_points: pyramids differ in size");
  }
  std::vector<PointCorrespondence> out(points.size());
  if (points.empty()) return out;

  std::vector<cv::Point2f> from;
  from.reserve(points.size());
  for (const auto& p : points) from.emplace_back(static_cast<float>(p.x), static_cast<float>(p.y));
  std::vector<cv::Point2f> to;
  std::vector<std::uint8_t> status;
  std::vector<float> err;
  cv::calcOpticalFlowPyrLK(
      prev.levels(), curr.levels(), from, to, status, err, cv::Size(params.window, params.window),
      std::max(0, params.levels - 1),
      cv::TermCriteria(cv::TermCriteria::COUNT | cv::TermCriteria::EPS, params.max_iterations, params.epsilon), 0,
      params.min_eigen);

  const double max_x = prev.width() - 1;
  const double max_y = prev.height() - 1;
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto& c = out[i];
    c.prev = points[i];
    c.curr = {to[i].x, to[i].y};
    c.residual = err[i];
    c.tracked = status[i] != 0 && std::isfinite(c.curr.x) && std::isfinite(c.curr.y) && c.curr.x >= 0.0 &&
                c.curr.x <= max_x && c.curr.y >= 0.0 && c.curr.y <= max_y;
  }
  return out;
}

namespace {

struct Normalizer {
  double cx = 0, cy = 0, s = 1;

  explicit Normalizer(std::span<const Point2d> pts) {
    for (const auto& p : pts) {
      cx += p.x;
      cy += p.y;
    }
    cx /= static_cast<double>(pts.size());
    cy /= static_cast<double>(pts.size());
    double mean_dist = 0;
    for (const auto& p : pts) mean_dist += std::hypot(p.x - cx, p.y - cy);
    mean_dist /= static_cast<double>(pts.size());
    s = mean_dist > 0 ? std::sqrt(2.0) / mean_dist : 1.0;
  }

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d t;
    t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
    return t;
  }
};

bool collinear(const Point2d& a, const Point2d& b, const Point2d& c) {
  const double cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  const double scale = std::max({1.0, std::hypot(b.x - a.x, b.y - a.y), std::hypot(c.x - a.x, c.y - a.y)});
  return std::abs(cross) <= 1e-6 * scale * scale;
}

bool degenerate_sample(const std::array<Point2d, 4>& p) {
  return collinear(p[0], p[1], p[2]) || collinear(p[0], p[1], p[3]) || collinear(p[0], p[2], p[3]) ||
         collinear(p[1], p[2], p[3]);
}

}  // namespace

Homography fit_homography(std::span<const Point2d> src, std::span<const Point2d> dst) {
  if (src.size() != dst.size()) throw Error("fit_homography: point lists differ in length");
  if (src.size() < 4) throw InsufficientPointsError("fit_homography: need at least 4 correspondences");
  const Normalizer ns(src);
  const Normalizer nd(dst);
  const Eigen::Index n = static_cast<Eigen::Index>(src.size());
  Eigen::MatrixXd a(std::max<Eigen::Index>(2 * n, 9), 9);
  a.setZero();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = (src[i].x - ns.cx) * ns.s;
    const double y = (src[i].y - ns.cy) * ns.s;
    const double u = (dst[i].x - nd.cx) * nd.s;
    const double v = (dst[i].y - nd.cy) * nd.s;
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd hv = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << hv(0), hv(1), hv(2), hv(3), hv(4), hv(5), hv(6), hv(7), hv(8);
  const Eigen::Matrix3d h = nd.matrix().inverse() * hn * ns.matrix();
  std::array<double, 9> m{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m[static_cast<std::size_t>(r * 3 + c)] = h(r, c);
  return Homography(m);
}

double reprojection_error(const Homography& h, const Point2d& src, const Point2d& dst) noexcept {
  const Point2d p = h.apply(src);
  const double e = std::hypot(p.x - dst.x, p.y - dst.y);
  return std::isfinite(e) ? e : std::numeric_limits<double>::infinity();
}

RegistrationResult estimate_homography(std::span<const PointCorrespondence> correspondences,
                                       const RansacParams& params) {
  std::vector<std::size_t> tracked;
  for (std::size_t i = 0; i < correspondences.size(); ++i) {
    if (correspondences[i].tracked) tracked.push_back(i);
  }
  if (tracked.size() < 4) {
    throw InsufficientPointsError("estimate_homography: fewer than 4 tracked correspondences");
  }
  std::vector<Point2d> src, dst;
  src.reserve(tracked.size());
  dst.reserve(tracked.size());
  for (std::size_t idx : tracked) {
    src.push_back(correspondences[idx].prev);
    dst.push_back(correspondences[idx].curr);
  }
  const std::size_t n = tracked.size();

  struct Score {
    std::size_t count = 0;
    double total_error = std::numeric_limits<double>::infinity();
    bool better_than(const Score& o) const {
      return count > o.count || (count == o.count && total_error < o.total_error);
    }
  };
  auto score_of = [&](const Homography& h, std::vector<std::uint8_t>* flags) {
    Score s{0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      const double e = reprojection_error(h, src[i], dst[i]);
      const bool inlier = e < params.reproj_threshold;
      if (inlier) {
        ++s.count;
        s.total_error += e;
      }
      if (flags) (*flags)[i] = inlier ? 1 : 0;
    }
    return s;
  };

  std::mt19937_64 rng(params.seed);
  Score best;
  Homography best_h;
  bool found = false;
  long long budget = std::max(1, params.max_iterations);
  std::array<std::size_t, 4> sample{};
  std::array<Point2d, 4> s_src{}, s_dst{};
  for (long long iter = 0; iter < budget; ++iter) {
    for (std::size_t k = 0; k < 4; ++k) {
      std::size_t pick;
      do {
        pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
      } while (std::find(sample.begin(), sample.begin() + static_cast<std::ptrdiff_t>(k), pick) !=
               sample.begin() + static_cast<std::ptrdiff_t>(k));
      sample[k] = pick;
      s_src[k] = src[pick];
      s_dst[k] = dst[pick];
    }
    if (degenerate_sample(s_src) || degenerate_sample(s_dst)) continue;
    const Homography h = fit_homography(s_src, s_dst);
    if (!h.invertible()) continue;
    const Score s = score_of(h, nullptr);
    if (!found || s.better_than(best)) {
      found = true;
      best = s;
      best_h = h;
      if (params.confidence < 1.0 && s.count > 0) {
        const double w = static_cast<double>(s.count) / static_cast<double>(n);
        const double p_fail = 1.0 - std::pow(w, 4.0);
        if (p_fail <= 0.0) {
          budget = std::min(budget, iter + 1);
        } else {
          const double need = std::log(1.0 - params.confidence) / std::log(p_fail);
          if (std::isfinite(need)) budget = std::min(budget, static_cast<long long>(std::ceil(need)));
        }
      }
    }
  }
  if (!found || best.count == 0) {
    throw DegenerateGeometryError("estimate_homography: every sample was degenerate");
  }

  std::vector<std::uint8_t> flags(n, 0);
  score_of(best_h, &flags);
  if (best.count >= 4) {
    std::vector<Point2d> in_src, in_dst;
    for (std::size_t i = 0; i < n; ++i) {
      if (flags[i]) {
        in_src.push_back(src[i]);
        in_dst.push_back(dst[i]);
      }
    }
    const Homography refit = fit_homography(in_src, in_dst);
    if (refit.invertible()) {
      std::vector<std::uint8_t> refit_flags(n, 0);
      const Score s = score_of(refit, &refit_flags);
      if (s.count >= best.count) {
        best_h = refit;
        best = s;
        flags = std::move(refit_flags);
      }
    }
  }

  RegistrationResult result;
  result.h = best_h;
  result.inlier_flags.assign(correspondences.size(), 0);
  for (std::size_t i = 0; i < n; ++i) result.inlier_flags[tracked[i]] = flags[i];
  result.inlier_ratio = static_cast<double>(best.count) / static_cast<double>(n);
  return result;
}

double background_motion(std::span<const PointCorrespondence> correspondences,
                         std::span<const std::uint8_t> inlier_flags) {
  if (correspondences.size() != inlier_flags.size()) {
    throw Error("background_motion: flag count does not match correspondences");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < correspondences.size(); ++i) {
    if (!inlier_flags[i]) continue;
    const auto& c = correspondences[i];
    sum += std::hypot(c.curr.x - c.prev.x, c.curr.y - c.prev.y);
    ++count;
  }
  if (count == 0) throw UndefinedMotionError("background_motion: no inlier correspondences");
  return sum / static_cast<double>(count);
}

}  // namespace movdet
