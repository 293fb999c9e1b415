#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "movdet/config.hpp"
#include "movdet/pipeline.hpp"
#include "movdet/sequence_io.hpp"

namespace movdet {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitInternal = 3,
};

/// Entry point of the `movdet` tool; `args` excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Help text block listing every configuration key with its default.
std::string config_help();

struct BenchReport {
  int width = 0;
  int height = 0;
  int frames = 0;
  double seconds = 0.0;
  StageTimings timings;

  double fps() const noexcept { return seconds > 0 ? frames / seconds : 0.0; }
};

/// Run the detector over in-memory frames, timing only the processing.
BenchReport benchmark(std::span<const RgbImage> frames, const PipelineConfig& config);
void write_bench_report(std::ostream& out, const BenchReport& report);

/// Detections for every frame of a sequence on disk.
std::vector<FrameDetections> detect_sequence(const SequenceManifest& manifest, const PipelineConfig& config);

}  // namespace movdet
