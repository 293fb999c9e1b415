#include "movdet/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <opencv2/core/utility.hpp>

#include "movdet/evaluation.hpp"
#include "movdet/synth.hpp"

namespace fs = std::filesystem;

namespace movdet {

std::string config_help() {
  const RunConfig defaults;
  std::ostringstream out;
  out << "Configuration keys (config file lines 'key = value', or --set key=value):\n";
  for (const auto& k : config_keys()) {
    std::string line = "  " + std::string(k.name) + " = " + get_config_value(defaults, k.name);
    line.resize(std::max<std::size_t>(line.size() + 1, 30), ' ');
    out << line << k.description;
    if (!k.provenance.empty()) out << " [method constant: " << k.provenance << "]";
    out << '\n';
  }
  out << "Precedence: --set overrides the config file, which overrides defaults.\n";
  return out.str();
}

std::vector<FrameDetections> detect_sequence(const SequenceManifest& manifest, const PipelineConfig& config) {
  PipelineState state(config);
  std::vector<FrameDetections> out;
  out.reserve(manifest.frame_paths.size());
  for (const auto& p : manifest.frame_paths) out.push_back(process_frame(state, read_frame(p)));
  return out;
}

BenchReport benchmark(std::span<const RgbImage> frames, const PipelineConfig& config) {
  BenchReport report;
  if (frames.empty()) return report;
  report.width = frames.front().width;
  report.height = frames.front().height;
  PipelineState state(config);
  const auto start = std::chrono::steady_clock::now();
  for (const auto& f : frames) process_frame(state, f, &report.timings);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.frames = static_cast<int>(frames.size());
  return report;
}

void write_bench_report(std::ostream& out, const BenchReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "frames %d at %dx%d: %.3f s, %.2f fps\n", r.frames, r.width, r.height, r.seconds,
                r.fps());
  out << buf;
  const double n = std::max(1, r.timings.frames);
  for (std::size_t i = 0; i < kStageCount; ++i) {
    std::snprintf(buf, sizeof buf, "  %-12s %8.3f ms/frame\n", std::string(stage_name(static_cast<Stage>(i))).c_str(),
                  1000.0 * r.timings.seconds[i] / n);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "  %-12s %8.3f ms/frame\n", "total", 1000.0 * r.timings.total() / n);
  out << buf;
}

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
};

RunConfig resolve_config(const CommonOptions& opts) {
  RunConfig config = opts.config_path.empty() ? RunConfig{} : load_run_config(opts.config_path);
  for (const auto& o : opts.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + o + "'");
    set_config_value(config, o.substr(0, eq), o.substr(eq + 1));
  }
  config.pipeline.validate();
  return config;
}

std::vector<fs::path> sequence_dirs(const fs::path& root) {
  if (is_sequence_dir(root)) return {root};
  if (!fs::is_directory(root)) throw NotFoundError("not a directory: " + root.string());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory() && is_sequence_dir(e.path())) dirs.push_back(e.path());
  }
  if (dirs.empty()) throw NotFoundError("no sequences (folders with images/) under " + root.string());
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

std::vector<std::string> stems_of(const SequenceManifest& m) {
  std::vector<std::string> stems;
  for (std::size_t i = 0; i < m.frame_paths.size(); ++i) stems.push_back(m.stem(i));
  return stems;
}

int cmd_detect(const CommonOptions& common, const std::string& seq, std::string out_dir, bool overlay,
               bool debug_dump, std::ostream& out) {
  const RunConfig config = resolve_config(common);
  const SequenceManifest manifest = load_sequence(seq);
  const fs::path dest = out_dir.empty() ? fs::path(seq) / "detections" : fs::path(out_dir);

  PipelineState state(config.pipeline);
  state.set_capture_debug(debug_dump);
  std::vector<FrameDetections> all;
  int failures = 0;
  std::size_t boxes = 0;
  for (std::size_t i = 0; i < manifest.frame_paths.size(); ++i) {
    const RgbImage frame = read_frame(manifest.frame_paths[i]);
    FrameDetections det = process_frame(state, frame);
    if (!det.diagnostics.homography_ok) ++failures;
    boxes += det.boxes.size();
    if (overlay) write_frame(dest / "overlay" / (manifest.stem(i) + ".png"), render_overlay(frame, det.boxes));
    if (debug_dump && det.debug) {
      const fs::path dbg = dest / "debug";
      write_gray(dbg / (manifest.stem(i) + "_d.png"), det.debug->d);
      write_gray(dbg / (manifest.stem(i) + "_dw.png"), det.debug->d_w);
      write_mask(dbg / (manifest.stem(i) + "_mask.png"), det.debug->mask);
      write_model_snapshot(dbg, manifest.stem(i), state.model());
    }
    det.debug.reset();
    all.push_back(std::move(det));
  }
  write_detections(all, stems_of(manifest), dest);
  out << "detect: " << manifest.name << ": " << all.size() << " frames, " << boxes << " boxes, " << failures
      << " registration fallbacks -> " << dest.string() << '\n';
  return kExitOk;
}

int cmd_evaluate(const CommonOptions& common, const std::string& seq, const std::string& det_dir, bool csv,
                 std::ostream& out) {
  const RunConfig config = resolve_config(common);
  const auto dirs = sequence_dirs(seq);
  const bool dataset = dirs.size() > 1 || !is_sequence_dir(seq);
  std::vector<SequenceReport> reports;
  for (const auto& dir : dirs) {
    const SequenceManifest manifest = load_sequence(dir);
    const auto gt = load_ground_truth(manifest);
    std::vector<std::vector<BoundingBox>> det;
    if (!det_dir.empty()) {
      det = load_detections(manifest, dataset ? fs::path(det_dir) / manifest.name : fs::path(det_dir));
    } else {
      for (auto& d : detect_sequence(manifest, config.pipeline)) det.push_back(std::move(d.boxes));
    }
    reports.push_back(evaluate_sequence(manifest.name, gt, det, config.tau, config.warmup));
  }
  if (csv) {
    write_report_csv(out, reports);
  } else {
    write_report_table(out, reports);
  }
  return kExitOk;
}

int cmd_synth(const std::string& config_path, const std::string& out_dir, std::ostream& out) {
  const SynthConfig config = load_synth_config(config_path);
  write_synth_sequence(config, out_dir);
  out << "synth: wrote " << config.frame_count << " frames to " << out_dir << '\n';
  return kExitOk;
}

int cmd_bench(const CommonOptions& common, const std::string& seq, int max_frames, int threads, std::ostream& out) {
  const RunConfig config = resolve_config(common);
  const SequenceManifest manifest = load_sequence(seq);
  std::vector<RgbImage> frames;
  const std::size_t n = max_frames > 0 ? std::min<std::size_t>(manifest.frame_paths.size(), max_frames)
                                       : manifest.frame_paths.size();
  for (std::size_t i = 0; i < n; ++i) frames.push_back(read_frame(manifest.frame_paths[i]));
  const int previous_threads = cv::getNumThreads();
  cv::setNumThreads(threads);
  const BenchReport report = benchmark(frames, config.pipeline);
  cv::setNumThreads(previous_threads);
  out << "bench: " << manifest.name << " (" << threads << " thread" << (threads == 1 ? "" : "s") << ")\n";
  write_bench_report(out, report);
  return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"movdet: moving-object detection for freely moving cameras"};
  app.name("movdet");
  app.require_subcommand(1);
  app.footer(config_help());

  CommonOptions common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "Configuration file (key = value lines)");
    sub->add_option("--set", common.overrides, "Override one key, KEY=VALUE (repeatable)");
    sub->footer(config_help());
  };

  std::string seq, out_dir, det_dir, synth_config;
  bool overlay = false, debug_dump = false, csv = false;
  int bench_frames = 0, threads = 1;

  CLI::App* detect = app.add_subcommand("detect", "Detect moving objects and write one box file per frame");
  detect->add_option("seq-dir", seq, "Sequence directory (holds images/)")->required();
  detect->add_option("--out", out_dir, "Output directory (default <seq-dir>/detections)");
  detect->add_flag("--overlay", overlay, "Also write frames with boxes drawn");
  detect->add_flag("--debug-dump", debug_dump, "Also write difference images, masks and model planes");
  add_common(detect);

  CLI::App* evaluate = app.add_subcommand("evaluate", "Score detections against ground truth");
  evaluate->add_option("seq-dir", seq, "Sequence directory, or a folder of sequences")->required();
  evaluate->add_option("det-dir", det_dir, "Detections to score; detection runs inline when omitted");
  evaluate->add_flag("--csv", csv, "Emit comma-separated records instead of the table");
  add_common(evaluate);

  CLI::App* synth = app.add_subcommand("synth", "Render a synthetic sequence with exact ground truth");
  synth->add_option("config", synth_config, "Synthetic sequence config (key = value lines)")->required();
  synth->add_option("out-dir", out_dir, "Output sequence directory")->required();

  CLI::App* bench = app.add_subcommand("bench", "Measure throughput and per-stage timing");
  bench->add_option("seq-dir", seq, "Sequence directory")->required();
  bench->add_option("--frames", bench_frames, "Process at most this many frames (0 = all)");
  bench->add_option("--threads", threads, "Worker threads for the vision backend")->check(CLI::PositiveNumber);
  add_common(bench);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* shown = &app;
    for (auto* sub : app.get_subcommands()) shown = sub;
    out << shown->help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "movdet: " << e.what() << '\n';
    const CLI::App* shown = &app;
    for (auto* sub : app.get_subcommands()) shown = sub;
    err << shown->help();
    return kExitUsage;
  }

  try {
    if (detect->parsed()) return cmd_detect(common, seq, out_dir, overlay, debug_dump, out);
    if (evaluate->parsed()) return cmd_evaluate(common, seq, det_dir, csv, out);
    if (synth->parsed()) return cmd_synth(synth_config, out_dir, out);
    if (bench->parsed()) return cmd_bench(common, seq, bench_frames, threads, out);
  } catch (const DataError& e) {
    err << "movdet: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "movdet: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace movdet
