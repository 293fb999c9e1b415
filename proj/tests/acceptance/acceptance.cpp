// Acceptance runner: one PASS/FAIL/SKIP line per criterion.
// Usage: acceptance [criterion...]; no arguments runs all of them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <opencv2/core/utility.hpp>

#include "movdet/cli.hpp"
#include "movdet/evaluation.hpp"
#include "movdet/pipeline.hpp"
#include "movdet/synth.hpp"

#ifndef MOVDET_UNIT_TESTS
#define MOVDET_UNIT_TESTS ""
#endif

namespace fs = std::filesystem;
using namespace movdet;
using Clock = std::chrono::steady_clock;

namespace {

enum class Verdict { pass, fail, skip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Shared scene of the end-to-end checks.
SynthConfig scene(double pan_x, double pan_y, bool sprite) {
  SynthConfig c;
  c.width = 640;
  c.height = 360;
  c.frame_count = 200;
  c.seed = 7;
  c.camera.pan_x = pan_x;
  c.camera.pan_y = pan_y;
  if (sprite) c.sprites.push_back({10, 170, 20, 20, 3.0, 0.0, 40});
  return c;
}

constexpr int kWarmup = 10;

// 1. F1 recomputed from reference precision and recall, per sequence and method.
Outcome f1_fixture() {
  struct Row {
    const char* sequence;
    const char* method;
    double pr, r, f1;
  };
  static const Row rows[] = {
      {"Elliot-road", "MCD", 0.3645, 0.4022, 0.3824},      {"Elliot-road", "SCBU", 0.1458, 0.163, 0.0294},
      {"Elliot-road", "movdet", 0.2987, 0.1010, 0.1510},   {"Marian", "MCD", 0.9895, 0.5754, 0.7276},
      {"Marian", "SCBU", 0.6706, 0.3971, 0.4988},          {"Marian", "movdet", 0.9231, 0.4395, 0.5955},
      {"Miksanskiy", "MCD", 0.9417, 0.9417, 0.9417},       {"Miksanskiy", "SCBU", 0.7236, 0.7619, 0.7422},
      {"Miksanskiy", "movdet", 0.2264, 0.8783, 0.3600},    {"Grisha-snow", "MCD", 0.8984, 0.2000, 0.3271},
      {"Grisha-snow", "SCBU", 0.1696, 0.0895, 0.1172},     {"Grisha-snow", "movdet", 0.9645, 0.1192, 0.2123},
      {"Shuraev-trekking", "MCD", 0.0514, 0.9373, 0.0975}, {"Shuraev-trekking", "SCBU", 0.6913, 0.8625, 0.7675},
      {"Shuraev-trekking", "movdet", 0.4217, 0.8909, 0.5724}, {"Zaborski", "MCD", 0.2059, 0.6777, 0.3159},
      {"Zaborski", "SCBU", 0.4268, 0.8607, 0.5706},        {"Zaborski", "movdet", 0.7713, 0.9123, 0.8359},
      {"Welton", "MCD", 0.0728, 0.6740, 0.1314},           {"Welton", "SCBU", 0.4203, 0.4322, 0.4262},
      {"Welton", "movdet", 0.2901, 0.3919, 0.3334},        {"Wolfgang", "MCD", 0.6747, 0.0777, 0.1393},
      {"Wolfgang", "SCBU", 0.1671, 0.1131, 0.1349},        {"Wolfgang", "movdet", 0.4662, 0.3233, 0.3818},
  };
  constexpr double tol = 0.0005;
  const auto t0 = Clock::now();
  int ok = 0;
  std::string misses;
  for (const auto& row : rows) {
    const double f1 = f1_score(row.pr, row.r);
    if (std::abs(f1 - row.f1) <= tol) {
      ++ok;
    } else {
      misses += fmt(" %s/%s: %.4f vs %.4f;", row.sequence, row.method, f1, row.f1);
    }
  }
  const double elapsed = seconds_since(t0);
  const int n = static_cast<int>(std::size(rows));
  const bool pass = ok == n && elapsed < 1.0;
  return {pass ? Verdict::pass : Verdict::fail,
          fmt("%d/%d rows within %.4f in %.3f s", ok, n, tol, elapsed) + (misses.empty() ? "" : " |" + misses)};
}

// 2. Module invariant suites.
Outcome invariant_suites() {
  const std::string bin = MOVDET_UNIT_TESTS;
  if (bin.empty() || !fs::exists(bin)) return {Verdict::fail, "unit test binary not found: " + bin};
  const int status = std::system((bin + " --minimal").c_str());
  return {status == 0 ? Verdict::pass : Verdict::fail, fmt("unit suites exit status %d", status)};
}

struct SceneRun {
  Metrics metrics;
  double seconds = 0.0;
};

SceneRun run_scene(const SynthConfig& config) {
  const auto t0 = Clock::now();
  const SynthRenderer renderer(config);
  PipelineState state;
  std::vector<MatchResult> per_frame;
  for (int t = 0; t < config.frame_count; ++t) {
    const RgbImage frame = renderer.frame(t);
    const FrameDetections det = process_frame(state, frame);
    if (t >= kWarmup) per_frame.push_back(match_frame(renderer.truth(t).boxes, det.boxes, 0.2));
  }
  return {aggregate_metrics(per_frame), seconds_since(t0)};
}

// 3. End-to-end recall and precision on the panning sprite scene.
Outcome end_to_end() {
  constexpr double min_pr = 0.95, min_r = 0.95, min_or = 0.5, max_seconds = 30.0;
  const SceneRun run = run_scene(scene(2.0, 0.0, true));
  const Metrics& m = run.metrics;
  const bool pass = m.pr >= min_pr && m.r >= min_r && m.o_r >= min_or && run.seconds < max_seconds;
  return {pass ? Verdict::pass : Verdict::fail,
          fmt("Pr %.4f (>= %.2f), R %.4f (>= %.2f), O_r %.4f (>= %.2f), tp %d fp %d fn %d, %.1f s (< %.0f)", m.pr,
              min_pr, m.r, min_r, m.o_r, min_or, m.tp, m.fp, m.fn, run.seconds, max_seconds)};
}

// 4. No sprites: every box is a false positive.
Outcome false_positives() {
  constexpr int max_fp = 2;
  const std::pair<double, double> pans[] = {{0.0, 0.0}, {2.0, 0.0}, {4.0, 0.0}, {0.0, 4.0}, {2.8, 2.8}};
  bool pass = true;
  std::string detail;
  for (const auto& [px, py] : pans) {
    const SceneRun run = run_scene(scene(px, py, false));
    pass = pass && run.metrics.fp <= max_fp;
    detail += fmt("pan (%.1f,%.1f): %d FP; ", px, py, run.metrics.fp);
  }
  return {pass ? Verdict::pass : Verdict::fail, detail + fmt("limit %d per sequence", max_fp)};
}

// 5. Single-threaded throughput at 640x360; 1080p reported only.
Outcome throughput() {
  constexpr double min_fps = 15.0;
  const int previous = cv::getNumThreads();
  cv::setNumThreads(1);
  auto frames_of = [](SynthConfig c, int n) {
    c.frame_count = n;
    return synth_generate(c).frames;
  };
  const auto small = frames_of(scene(2.0, 0.0, true), 100);
  const BenchReport r = benchmark(small, PipelineConfig{});
  SynthConfig hd = scene(2.0, 0.0, true);
  hd.width = 1920;
  hd.height = 1080;
  const BenchReport big = benchmark(frames_of(hd, 15), PipelineConfig{});
  cv::setNumThreads(previous);
  std::ostringstream stages;
  write_bench_report(stages, r);
  std::fputs(stages.str().c_str(), stdout);
  return {r.fps() >= min_fps ? Verdict::pass : Verdict::fail,
          fmt("640x360 %.2f fps (>= %.0f); 1920x1080 %.2f fps (not gated)", r.fps(), min_fps, big.fps())};
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    files[e.path().filename().string()] = std::string(std::istreambuf_iterator<char>(in), {});
  }
  return files;
}

// 6. Two detect runs over the same sequence give identical files.
Outcome determinism() {
  std::random_device rd;
  const fs::path root = fs::temp_directory_path() / ("movdet_accept_" + std::to_string(rd()));
  fs::create_directories(root);
  write_synth_sequence(scene(2.0, 0.0, true), root / "seq");
  std::ostringstream out, err;
  int codes = 0;
  for (const char* name : {"a", "b"})
    codes |= run_command({"detect", (root / "seq").string(), "--out", (root / name).string()}, out, err);
  Outcome o{Verdict::fail, "detect failed: " + err.str()};
  if (codes == 0) {
    const auto a = read_tree(root / "a");
    const auto b = read_tree(root / "b");
    std::size_t boxes = 0;
    for (const auto& [name, text] : a) boxes += static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
    o = {a == b && a.size() == 200 ? Verdict::pass : Verdict::fail,
         fmt("%zu and %zu files, %s, %zu boxes", a.size(), b.size(), a == b ? "byte-identical" : "DIFFERENT", boxes)};
  }
  fs::remove_all(root);
  return o;
}

// 7. Real data, when a dataset is provided through MOVDET_DATASET.
Outcome dataset() {
  const char* root = std::getenv("MOVDET_DATASET");
  if (!root || !*root) return {Verdict::skip, "MOVDET_DATASET not set"};
  std::ostringstream out, err;
  const auto t0 = Clock::now();
  const int code = run_command({"evaluate", root, "--set", "warmup=" + std::to_string(kWarmup)}, out, err);
  std::fputs(out.str().c_str(), stdout);
  const bool shaped = out.str().find("F1") != std::string::npos;
  return {code == 0 && shaped ? Verdict::pass : Verdict::fail,
          fmt("evaluate exit %d in %.1f s", code, seconds_since(t0)) + (err.str().empty() ? "" : ": " + err.str())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"F1 recomputed from reference Pr and R", f1_fixture},
      {"module invariant suites", invariant_suites},
      {"end-to-end synthetic Pr/R/O_r", end_to_end},
      {"false positives without objects", false_positives},
      {"throughput", throughput},
      {"detect determinism", determinism},
      {"dataset evaluation", dataset},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty())
    for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) selected.push_back(i);

  int failed = 0, skipped = 0;
  for (int id : selected) {
    if (id < 1 || id > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion %d\n", id);
      return 2;
    }
    const auto& [name, check] = criteria[id - 1];
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {Verdict::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::fail ? "FAIL" : "SKIP";
    std::printf("criterion %d %s: %s - %s\n", id, tag, name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.verdict == Verdict::fail;
    skipped += o.verdict == Verdict::skip;
  }
  if (failed) return 1;
  return skipped == static_cast<int>(selected.size()) ? 77 : 0;
}
