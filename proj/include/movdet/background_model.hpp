#pragma once

#include "movdet/image.hpp"

namespace movdet {

/// Per-pixel running mean of S and V plus an age counter. The learning rate of
/// a pixel is 1 / age.
struct BackgroundModel {
  ModelPlane mu_s;
  ModelPlane mu_v;
  AgePlane age;

  int width() const noexcept { return mu_v.width(); }
  int height() const noexcept { return mu_v.height(); }
};

BackgroundModel init_model(const ImagePlane& s, const ImagePlane& v);

/// Align the model with the current frame. Means are sampled bilinearly, ages by
/// nearest neighbour; pixels whose source lies outside the previous frame start
/// over at age 0.
BackgroundModel warp_model(const BackgroundModel& model, const Homography& h);

/// Blend one observation into every pixel: age' = min(age + 1, age_max),
/// mu' = (1 - 1/age') mu + (1/age') I.
BackgroundModel update_model(BackgroundModel model, const ImagePlane& s, const ImagePlane& v, int age_max);

}  // namespace movdet
