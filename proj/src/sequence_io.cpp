#include "movdet/sequence_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace fs = std::filesystem;

namespace movdet {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool is_image_file(const fs::path& p) {
  const std::string ext = lower(p.extension().string());
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

// Digit runs compare by value, everything else bytewise.
bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (std::isdigit(static_cast<unsigned char>(a[i])) && std::isdigit(static_cast<unsigned char>(b[j]))) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      std::string_view da(a.data() + i, ie - i), db(b.data() + j, je - j);
      while (da.size() > 1 && da.front() == '0') da.remove_prefix(1);
      while (db.size() > 1 && db.front() == '0') db.remove_prefix(1);
      if (da.size() != db.size()) return da.size() < db.size();
      if (da != db) return da < db;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  return a.size() - i < b.size() - j;
}

std::uint32_t be32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

}  // namespace

bool is_sequence_dir(const fs::path& dir) { return fs::is_directory(dir / "images"); }

std::pair<int, int> read_image_size(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open image: " + path.string());
  std::vector<unsigned char> head(24);
  in.read(reinterpret_cast<char*>(head.data()), 24);
  if (in.gcount() >= 24 && head[0] == 0x89 && head[1] == 'P' && head[2] == 'N' && head[3] == 'G') {
    return {static_cast<int>(be32(&head[16])), static_cast<int>(be32(&head[20]))};
  }
  if (in.gcount() >= 2 && head[0] == 0xFF && head[1] == 0xD8) {
    in.clear();
    in.seekg(2);
    while (in) {
      int c = in.get();
      if (c != 0xFF) continue;
      int marker = in.get();
      while (marker == 0xFF) marker = in.get();
      if (marker == 0xD8 || marker == 0x01 || (marker >= 0xD0 && marker <= 0xD7)) continue;
      unsigned char len_bytes[2];
      in.read(reinterpret_cast<char*>(len_bytes), 2);
      const int len = (len_bytes[0] << 8) | len_bytes[1];
      const bool sof = marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 && marker != 0xCC;
      if (sof) {
        unsigned char sof_data[5];
        in.read(reinterpret_cast<char*>(sof_data), 5);
        if (!in) break;
        return {(sof_data[3] << 8) | sof_data[4], (sof_data[1] << 8) | sof_data[2]};
      }
      in.seekg(len - 2, std::ios::cur);
    }
  }
  throw FormatError("not a PNG or JPEG file: " + path.string());
}

SequenceManifest load_sequence(const fs::path& root, const LoadOptions& options) {
  if (!fs::is_directory(root)) throw NotFoundError("sequence directory not found: " + root.string());
  const fs::path images = root / "images";
  if (!fs::is_directory(images)) throw NotFoundError("missing images/ folder in " + root.string());

  SequenceManifest m;
  m.root = root;
  m.name = fs::absolute(root).lexically_normal().filename().string();
  if (m.name.empty()) m.name = fs::absolute(root).lexically_normal().parent_path().filename().string();
  for (const auto& entry : fs::directory_iterator(images)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) m.frame_paths.push_back(entry.path());
  }
  if (m.frame_paths.empty()) throw FormatError("no PNG/JPEG frames in " + images.string());
  std::sort(m.frame_paths.begin(), m.frame_paths.end(), [&](const fs::path& a, const fs::path& b) {
    const std::string fa = a.filename().string(), fb = b.filename().string();
    return options.natural_sort ? natural_less(fa, fb) : fa < fb;
  });
  m.frame_count = static_cast<int>(m.frame_paths.size());

  std::tie(m.width, m.height) = read_image_size(m.frame_paths.front());
  for (const auto& p : m.frame_paths) {
    if (read_image_size(p) != std::pair{m.width, m.height}) {
      throw FormatError("frame size differs from the first frame: " + p.string());
    }
  }

  const fs::path ann = root / "annotations";
  if (fs::is_directory(ann)) {
    int present = 0;
    for (std::size_t i = 0; i < m.frame_paths.size(); ++i) {
      fs::path p = ann / (m.stem(i) + ".txt");
      if (fs::is_regular_file(p)) {
        ++present;
      } else {
        m.warnings.push_back("no annotation for frame " + m.stem(i));
      }
      m.annotation_paths.push_back(std::move(p));
    }
    int files = 0;
    for (const auto& entry : fs::directory_iterator(ann)) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt") ++files;
    }
    if (files != m.frame_count) {
      m.warnings.push_back("annotation count " + std::to_string(files) + " differs from frame count " +
                           std::to_string(m.frame_count));
    }
    if (present == 0) m.annotation_paths.clear();
  }
  return m;
}

RgbImage read_frame(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw NotFoundError("no such image: " + path.string());
  const cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw FormatError("cannot decode image: " + path.string());
  RgbImage out(bgr.cols, bgr.rows);
  cv::Mat rgb(bgr.rows, bgr.cols, CV_8UC3, out.data.data());
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  return out;
}

namespace {

void ensure_parent(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
}

void write_mat(const fs::path& path, const cv::Mat& mat) {
  ensure_parent(path);
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), mat);
  } catch (const cv::Exception& e) {
    throw IoError("cannot write " + path.string() + ": " + e.what());
  }
  if (!ok) throw IoError("cannot write " + path.string());
}

}  // namespace

void write_frame(const fs::path& path, const RgbImage& image) {
  if (image.empty()) throw DimensionError("write_frame: empty image");
  cv::Mat rgb(image.height, image.width, CV_8UC3, const_cast<std::uint8_t*>(image.data.data()));
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  write_mat(path, bgr);
}

void write_gray(const fs::path& path, const ImagePlane& plane) {
  cv::Mat m(plane.height(), plane.width(), CV_8UC1, const_cast<std::uint8_t*>(plane.values().data()));
  write_mat(path, m);
}

void write_mask(const fs::path& path, const BinaryMask& mask) {
  ImagePlane scaled(mask.width(), mask.height());
  std::transform(mask.values().begin(), mask.values().end(), scaled.values().begin(),
                 [](std::uint8_t v) { return static_cast<std::uint8_t>(v ? 255 : 0); });
  write_gray(path, scaled);
}

void write_gray16(const fs::path& path, const AgePlane& plane) {
  cv::Mat m(plane.height(), plane.width(), CV_16UC1, const_cast<std::uint16_t*>(plane.values().data()));
  write_mat(path, m);
}

void write_gray(const fs::path& path, const ModelPlane& plane, double scale) {
  cv::Mat m(plane.height(), plane.width(), CV_32FC1, const_cast<float*>(plane.values().data()));
  cv::Mat out;
  m.convertTo(out, CV_8UC1, scale);
  write_mat(path, out);
}

std::vector<BoundingBox> parse_annotation_text(std::string_view text) {
  std::vector<BoundingBox> boxes;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) continue;
    if (line[first] == '#') continue;

    std::vector<int> fields;
    std::size_t i = first;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
      int value = 0;
      const auto [ptr, ec] = std::from_chars(line.data() + i, line.data() + j, value);
      if (ec != std::errc() || ptr != line.data() + j) {
        throw ParseError("annotation field is not an integer: '" + std::string(line.substr(i, j - i)) + "'",
                         line_no);
      }
      fields.push_back(value);
      i = j;
    }
    if (fields.size() != 4) {
      throw ParseError("expected 4 fields 'x y w h', got " + std::to_string(fields.size()), line_no);
    }
    if (fields[2] < 0 || fields[3] < 0) throw ParseError("negative box size", line_no);
    boxes.push_back({fields[0], fields[1], fields[2], fields[3]});
  }
  return boxes;
}

FrameAnnotation parse_annotations(const fs::path& file, int frame_index) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw NotFoundError("cannot open annotation file: " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return {frame_index, parse_annotation_text(buf.str())};
  } catch (const ParseError& e) {
    throw ParseError(file.string() + ": " + e.what(), e.line());
  }
}

std::string format_annotations(std::span<const BoundingBox> boxes) {
  std::string out;
  for (const auto& b : boxes) {
    out += std::to_string(b.x) + ' ' + std::to_string(b.y) + ' ' + std::to_string(b.w) + ' ' +
           std::to_string(b.h) + '\n';
  }
  return out;
}

void write_annotations(const fs::path& file, std::span<const BoundingBox> boxes) {
  ensure_parent(file);
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  out << format_annotations(boxes);
  if (!out) throw IoError("write failed: " + file.string());
}

namespace {

std::vector<BoundingBox> default_reader(const fs::path& p) { return parse_annotations(p).boxes; }

}  // namespace

std::vector<std::vector<BoundingBox>> load_ground_truth(const SequenceManifest& manifest,
                                                        const AnnotationReader& reader) {
  if (!manifest.annotations_consistent()) {
    std::string why = manifest.has_annotations() ? "annotations do not match frames" : "no annotations";
    if (!manifest.warnings.empty()) why += ": " + manifest.warnings.front();
    throw FormatError("cannot evaluate " + manifest.name + ": " + why);
  }
  const AnnotationReader& read = reader ? reader : AnnotationReader(default_reader);
  std::vector<std::vector<BoundingBox>> out;
  out.reserve(manifest.annotation_paths.size());
  for (const auto& p : manifest.annotation_paths) out.push_back(read(p));
  return out;
}

std::vector<std::vector<BoundingBox>> load_detections(const SequenceManifest& manifest, const fs::path& dir,
                                                      const AnnotationReader& reader) {
  if (!fs::is_directory(dir)) throw NotFoundError("detection directory not found: " + dir.string());
  const AnnotationReader& read = reader ? reader : AnnotationReader(default_reader);
  std::vector<std::vector<BoundingBox>> out;
  out.reserve(manifest.frame_paths.size());
  for (std::size_t i = 0; i < manifest.frame_paths.size(); ++i) {
    const fs::path p = dir / (manifest.stem(i) + ".txt");
    if (!fs::is_regular_file(p)) throw NotFoundError("missing detection file " + p.string());
    out.push_back(read(p));
  }
  return out;
}

void write_detections(std::span<const FrameDetections> detections, std::span<const std::string> stems,
                      const fs::path& destination) {
  if (stems.size() != detections.size()) throw Error("write_detections: one stem per frame required");
  std::error_code ec;
  fs::create_directories(destination, ec);
  if (ec || !fs::is_directory(destination)) {
    throw IoError("cannot create output directory " + destination.string());
  }
  for (std::size_t i = 0; i < detections.size(); ++i) {
    write_annotations(destination / (stems[i] + ".txt"), detections[i].boxes);
  }
}

RgbImage render_overlay(const RgbImage& frame, std::span<const BoundingBox> boxes,
                        std::array<std::uint8_t, 3> color, int thickness) {
  RgbImage out = frame;
  auto paint = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= out.width || y >= out.height) return;
    std::uint8_t* p = out.pixel(x, y);
    p[0] = color[0];
    p[1] = color[1];
    p[2] = color[2];
  };
  for (const auto& b : boxes) {
    for (int t = 0; t < thickness; ++t) {
      for (int x = b.x; x < b.right(); ++x) {
        paint(x, b.y + t);
        paint(x, b.bottom() - 1 - t);
      }
      for (int y = b.y; y < b.bottom(); ++y) {
        paint(b.x + t, y);
        paint(b.right() - 1 - t, y);
      }
    }
  }
  return out;
}

void write_model_snapshot(const fs::path& dir, const std::string& stem, const BackgroundModel& model) {
  write_gray(dir / (stem + "_mu_v.png"), model.mu_v);
  write_gray16(dir / (stem + "_age.png"), model.age);
}

}  // namespace movdet
