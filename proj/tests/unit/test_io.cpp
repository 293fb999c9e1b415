#include <fstream>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "movdet/config.hpp"
#include "movdet/sequence_io.hpp"
#include "movdet/synth.hpp"

using namespace movdet;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

bool inside(const BoundingBox& b, int x, int y) { return x >= b.x && x < b.right() && y >= b.y && y < b.bottom(); }

RgbImage solid(int w, int h, std::uint8_t v) {
  RgbImage img(w, h);
  std::fill(img.data.begin(), img.data.end(), v);
  return img;
}

}  // namespace

TEST_CASE("annotation text") {
  const auto boxes = parse_annotation_text("# header\n\n10 20 30 40\n  1 2 3 4  \n");
  CHECK(boxes == std::vector<BoundingBox>{{10, 20, 30, 40}, {1, 2, 3, 4}});
  CHECK(parse_annotation_text("").empty());
  CHECK_THROWS_AS(parse_annotation_text("1 2 3\n"), ParseError);
  CHECK_THROWS_AS(parse_annotation_text("1 2 x 4\n"), ParseError);

  std::mt19937 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<BoundingBox> b;
    for (int i = 0, n = static_cast<int>(rng() % 6); i < n; ++i)
      b.push_back({static_cast<int>(rng() % 500), static_cast<int>(rng() % 500), 1 + static_cast<int>(rng() % 50),
                   1 + static_cast<int>(rng() % 50)});
    CHECK(parse_annotation_text(format_annotations(b)) == b);
  }
}

TEST_CASE("sequence loading") {
  test::TempDir tmp("t");
  CHECK_THROWS_AS(load_sequence(tmp.path() / "missing"), NotFoundError);
  fs::create_directories(tmp.path() / "empty" / "images");
  CHECK_THROWS_AS(load_sequence(tmp.path() / "empty"), FormatError);

  const fs::path seq = tmp.path() / "seq";
  for (const char* name : {"frame_10", "frame_2", "frame_1"}) write_frame(seq / "images" / (std::string(name) + ".png"), solid(8, 6, 7));
  CHECK(is_sequence_dir(seq));
  const auto m = load_sequence(seq);
  CHECK(m.name == "seq");
  CHECK(m.width == 8);
  CHECK(m.height == 6);
  REQUIRE(m.frame_count == 3);
  CHECK(m.stem(0) == "frame_1");
  CHECK(m.stem(1) == "frame_10");
  CHECK(m.stem(2) == "frame_2");
  CHECK_FALSE(m.has_annotations());
  const auto natural = load_sequence(seq, {.natural_sort = true});
  CHECK(natural.stem(1) == "frame_2");
  CHECK(read_image_size(m.frame_paths[0]) == std::pair{8, 6});

  write_frame(seq / "images" / "frame_3.png", solid(9, 6, 7));
  CHECK_THROWS_AS(load_sequence(seq), FormatError);
}

TEST_CASE("frames survive a write and read") {
  test::TempDir tmp("t");
  std::mt19937 rng(5);
  RgbImage img(13, 7);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng());
  write_frame(tmp.path() / "a.png", img);
  CHECK(read_frame(tmp.path() / "a.png").data == img.data);
  CHECK_THROWS_AS(read_frame(tmp.path() / "none.png"), NotFoundError);
}

TEST_CASE("detections: one file per frame, empty frames included") {
  test::TempDir tmp("t");
  std::vector<FrameDetections> det(3);
  det[1].boxes = {{1, 2, 3, 4}};
  const std::vector<std::string> stems{"a", "b", "c"};
  write_detections(det, stems, tmp.path() / "out");
  for (const auto& s : stems) CHECK(fs::exists(tmp.path() / "out" / (s + ".txt")));
  CHECK(fs::file_size(tmp.path() / "out" / "a.txt") == 0);
  CHECK(parse_annotations(tmp.path() / "out" / "b.txt").boxes == det[1].boxes);
}

TEST_CASE("overlay keeps the frame size and draws the outline") {
  const RgbImage frame = solid(40, 30, 0);
  const RgbImage out = render_overlay(frame, std::vector<BoundingBox>{{5, 5, 10, 10}}, {255, 0, 0}, 1);
  CHECK(out.width == 40);
  CHECK(out.height == 30);
  CHECK(out.pixel(5, 5)[0] == 255);
  CHECK(out.pixel(10, 10)[0] == 0);
  CHECK(out.pixel(0, 0)[0] == 0);
}

TEST_CASE("synthetic sequences") {
  SynthConfig c;
  c.width = 160;
  c.height = 120;
  c.frame_count = 12;
  c.seed = 3;
  c.camera.pan_x = 2;
  c.sprites.push_back({50, 50, 10, 10, 3, 0, 40});
  const auto a = synth_generate(c);
  const auto b = synth_generate(c);
  REQUIRE(a.frames.size() == 12);
  for (int t = 0; t < 12; ++t) CHECK(a.frames[t].data == b.frames[t].data);
  CHECK(a.truth[10].boxes == std::vector<BoundingBox>{{80, 50, 10, 10}});
  CHECK(a.truth[10].frame_index == 10);

  SynthConfig still = c;
  still.camera = {};
  still.sprites.clear();
  const auto s = synth_generate(still);
  for (int t = 1; t < 12; ++t) CHECK(s.frames[t].data == s.frames[0].data);
  CHECK(s.truth[5].boxes.empty());

  // Sprite pixels differ from the sprite-free render only inside the box.
  SynthConfig plain = c;
  plain.sprites.clear();
  const auto p = synth_generate(plain);
  int outside = 0;
  for (int y = 0; y < 120; ++y)
    for (int x = 0; x < 160; ++x)
      if (!inside(a.truth[4].boxes[0], x, y))
        for (int ch = 0; ch < 3; ++ch) outside += a.frames[4].pixel(x, y)[ch] != p.frames[4].pixel(x, y)[ch];
  CHECK(outside == 0);

  SynthConfig leaving = c;
  leaving.sprites[0].vx = 20;
  CHECK_THROWS_AS(synth_generate(leaving), ConfigError);

  CHECK(parse_synth_config(format_synth_config(c)) == c);
  CHECK_THROWS_AS(parse_synth_config("colour = 3\n"), DataError);
}

TEST_CASE("camera motion of the renderer") {
  SynthConfig c;
  c.width = 100;
  c.height = 80;
  c.frame_count = 5;
  c.camera.pan_x = 2;
  const SynthRenderer r(c);
  const Point2d p = r.frame_motion(3).apply({40, 30});
  CHECK(p.x == doctest::Approx(38));
  CHECK(p.y == doctest::Approx(30));
}

TEST_CASE("run configuration") {
  RunConfig c;
  c.pipeline.age_max = 25;
  c.pipeline.foreground.t_base = 35.5;
  c.tau = 0.3;
  c.warmup = 4;
  CHECK(parse_run_config(format_run_config(c)) == c);
  CHECK(parse_run_config(format_run_config(RunConfig{})) == RunConfig{});
  for (const auto& k : config_keys()) {
    RunConfig d;
    set_config_value(d, k.name, get_config_value(RunConfig{}, k.name));
    CHECK(d == RunConfig{});
  }
  CHECK_THROWS_AS(parse_run_config("no_such_key = 1\n"), DataError);
  CHECK_THROWS_AS(parse_run_config("tau = abc\n"), DataError);
  CHECK(format_double(0.1) == "0.1");
  CHECK(parse_double(format_double(1.0 / 3.0), "x") == 1.0 / 3.0);
}
