#pragma once

#include "movdet/image.hpp"

namespace movdet {

struct ForegroundParams {
  double t_base = 40.0;    // T
  double lambda1 = 0.005;
  double lambda2 = 0.25;   // per pixel/frame of background motion
  int t_age = 5;           // frames
  double t_mag = 5.0;      // pixels/frame
  double w_cap = 4.0;

  /// Throws ConfigError unless every field is strictly positive and w_cap >= 1.
  void validate() const;
};

/// D(p) = min over the border-clipped 3x3 neighbourhood k of p of |frame(k) - mu(p)|.
ModelPlane neighborhood_difference(const ImagePlane& frame, const ModelPlane& mu);

/// Per-pixel maximum of the S and V differences.
ModelPlane fuse_sv(const ModelPlane& d_s, const ModelPlane& d_v);

/// T_a = T * lambda1 * exp(a_bg * lambda2).
double adaptive_threshold(const ForegroundParams& params, double a_bg);

ModelPlane weighted_difference(const ModelPlane& d, const ModelPlane& weights);

/// 1 where d_w > t_a and age > t_age.
BinaryMask threshold_mask(const ModelPlane& d_w, double t_a, const AgePlane& age, int t_age);

}  // namespace movdet
