"""Moving-object detection for freely moving cameras."""

from ._core import (  # noqa: F401
    Detector,
    Error,
    adaptive_threshold,
    config_defaults,
    estimate_homography,
    evaluate,
    magnitude_weights,
    neighborhood_difference,
    overlap_ratio,
    rgb_to_sv,
    select_grid_points,
    synth_generate,
    warp_perspective,
)

__version__ = "0.1.0"
