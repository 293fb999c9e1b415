#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "movdet/background_model.hpp"
#include "movdet/image.hpp"
#include "movdet/pipeline.hpp"

namespace movdet {

struct FrameAnnotation {
  int frame_index = 0;
  std::vector<BoundingBox> boxes;
};

/// One sequence in the `<seq>/images`, `<seq>/annotations` layout.
struct SequenceManifest {
  std::string name;
  std::filesystem::path root;
  std::vector<std::filesystem::path> frame_paths;       // lexicographic order
  std::vector<std::filesystem::path> annotation_paths;  // parallel to frame_paths when consistent
  int width = 0;
  int height = 0;
  int frame_count = 0;
  std::vector<std::string> warnings;

  bool has_annotations() const noexcept { return !annotation_paths.empty(); }
  /// Annotations exist for every frame and nothing was flagged while loading.
  bool annotations_consistent() const noexcept {
    return has_annotations() && warnings.empty() && annotation_paths.size() == frame_paths.size();
  }
  /// File stem of frame i; annotation and detection files use the same stem.
  std::string stem(std::size_t i) const { return frame_paths.at(i).stem().string(); }
};

struct LoadOptions {
  /// Order frame_2 before frame_10. Off by default: plain lexicographic order.
  bool natural_sort = false;
};

/// Throws NotFoundError when the directory or its images/ folder is missing,
/// FormatError when there are no frames or their sizes differ.
SequenceManifest load_sequence(const std::filesystem::path& root, const LoadOptions& options = {});

/// True when `dir` holds an images/ folder.
bool is_sequence_dir(const std::filesystem::path& dir);

/// Width and height from a PNG or JPEG header without decoding pixels.
std::pair<int, int> read_image_size(const std::filesystem::path& path);

RgbImage read_frame(const std::filesystem::path& path);
void write_frame(const std::filesystem::path& path, const RgbImage& image);
/// 8-bit or 16-bit single-channel PNG.
void write_gray(const std::filesystem::path& path, const ImagePlane& plane);
/// 0/1 mask written as 0/255.
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);
void write_gray16(const std::filesystem::path& path, const AgePlane& plane);
/// Float plane scaled by `scale`, rounded and saturated to 8 bits.
void write_gray(const std::filesystem::path& path, const ModelPlane& plane, double scale = 1.0);

/// Reads one annotation file into boxes. Swappable so other label encodings can
/// feed the evaluator without touching it.
using AnnotationReader = std::function<std::vector<BoundingBox>(const std::filesystem::path&)>;

/// "x y w h" per line; blank lines and lines starting with '#' are skipped.
std::vector<BoundingBox> parse_annotation_text(std::string_view text);
FrameAnnotation parse_annotations(const std::filesystem::path& file, int frame_index = 0);
std::string format_annotations(std::span<const BoundingBox> boxes);
void write_annotations(const std::filesystem::path& file, std::span<const BoundingBox> boxes);

/// Ground truth of every frame, in manifest order.
std::vector<std::vector<BoundingBox>> load_ground_truth(const SequenceManifest& manifest,
                                                        const AnnotationReader& reader = {});
/// Detections previously written with write_detections, matched by frame stem.
std::vector<std::vector<BoundingBox>> load_detections(const SequenceManifest& manifest,
                                                      const std::filesystem::path& dir,
                                                      const AnnotationReader& reader = {});

/// One annotation-format file per frame, named `<stem>.txt`. Frames with no
/// boxes still get an (empty) file.
void write_detections(std::span<const FrameDetections> detections, std::span<const std::string> stems,
                      const std::filesystem::path& destination);

/// Copy of `frame` with each box outlined.
RgbImage render_overlay(const RgbImage& frame, std::span<const BoundingBox> boxes,
                        std::array<std::uint8_t, 3> color = {255, 0, 0}, int thickness = 2);

void write_model_snapshot(const std::filesystem::path& dir, const std::string& stem, const BackgroundModel& model);

}  // namespace movdet
