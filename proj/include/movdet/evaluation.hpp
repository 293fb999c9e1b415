#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "movdet/image.hpp"

namespace movdet {

struct MatchResult {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  std::vector<double> tp_overlaps;
};

struct Metrics {
  double pr = 0.0;
  double r = 0.0;
  double f1 = 0.0;
  double o_r = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

/// Intersection area over the ground-truth area (not IoU).
double overlap_ratio(const BoundingBox& gt, const BoundingBox& det) noexcept;

/// One-to-one assignment of detections to ground truth. A pair can match when
/// its overlap ratio is at least tau; the assignment maximizes the number of
/// matches, then their total overlap. Unmatched ground truth is FN; a detection
/// is FP only when it overlaps every ground-truth box by less than tau.
MatchResult match_frame(std::span<const BoundingBox> gt, std::span<const BoundingBox> det, double tau = 0.2);

/// Pooled precision, recall, F1 and mean TP overlap. Zero denominators give 0.
Metrics aggregate_metrics(std::span<const MatchResult> results);

double f1_score(double precision, double recall) noexcept;

struct SequenceReport {
  std::string name;
  Metrics metrics;
  int frames = 0;
};

/// Score a whole sequence frame by frame, skipping the first `warmup` frames.
SequenceReport evaluate_sequence(std::string name, std::span<const std::vector<BoundingBox>> gt,
                                 std::span<const std::vector<BoundingBox>> det, double tau = 0.2, int warmup = 0);

/// Arithmetic mean of each metric across sequences.
Metrics average_metrics(std::span<const SequenceReport> reports);

/// Aligned text: one column per sequence with O_r / Pr / R / F1 rows, followed
/// by a column of averages when there is more than one sequence.
void write_report_table(std::ostream& out, std::span<const SequenceReport> reports);
/// `sequence,frames,tp,fp,fn,o_r,pr,r,f1` records, plus an `average` record.
void write_report_csv(std::ostream& out, std::span<const SequenceReport> reports);

}  // namespace movdet
