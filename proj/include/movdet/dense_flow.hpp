#pragma once

#include "movdet/image.hpp"

namespace movdet {

/// Polynomial-expansion (Farneback) flow settings.
struct FlowParams {
  double pyr_scale = 0.5;
  int levels = 3;
  int window = 15;
  int iterations = 3;
  int poly_n = 5;
  double poly_sigma = 1.1;
};

struct FlowField {
  ModelPlane dx;
  ModelPlane dy;
};

/// Displacement field taking `a` toward `b`: a(x, y) ~ b(x + dx, y + dy).
FlowField estimate_dense_flow(const ImagePlane& a, const ImagePlane& b, const FlowParams& params);
/// Same, against a fractional plane (the model mean).
FlowField estimate_dense_flow(const ImagePlane& a, const ModelPlane& b, const FlowParams& params);

ModelPlane flow_magnitude(const FlowField& flow);

/// weight = min(mag / t_mag, w_cap) where mag > t_mag, else exactly 1.
ModelPlane magnitude_weights(const ModelPlane& mag, double t_mag, double w_cap);

}  // namespace movdet
