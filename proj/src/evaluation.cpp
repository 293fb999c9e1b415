#include "movdet/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <ostream>

namespace movdet {

double overlap_ratio(const BoundingBox& gt, const BoundingBox& det) noexcept {
  const long long area = gt.area();
  if (area <= 0) return 0.0;
  return static_cast<double>(intersection_area(gt, det)) / static_cast<double>(area);
}

namespace {

// Maximum-weight assignment on a dense n x m weight matrix (Kuhn-Munkres,
// potentials form). Returns, for each row, the assigned column or -1.
std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weight, int rows, int cols) {
  const int n = std::max(rows, cols);
  constexpr double inf = std::numeric_limits<double>::infinity();
  // Square cost matrix, minimized; padding entries cost 0.
  auto cost = [&](int i, int j) { return (i < rows && j < cols) ? -weight[i][j] : 0.0; };
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(rows, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] >= 1 && p[j] <= rows && j <= cols) assignment[p[j] - 1] = j - 1;
  }
  return assignment;
}

}  // namespace

MatchResult match_frame(std::span<const BoundingBox> gt, std::span<const BoundingBox> det, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw Error("match_frame: tau must lie in (0, 1]");
  MatchResult result;
  const int rows = static_cast<int>(gt.size());
  const int cols = static_cast<int>(det.size());
  std::vector<std::vector<double>> ratio(rows, std::vector<double>(cols, 0.0));
  std::vector<char> det_overlaps_any(cols, 0);
  bool any_pair = false;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      ratio[i][j] = overlap_ratio(gt[i], det[j]);
      if (ratio[i][j] >= tau) {
        det_overlaps_any[j] = 1;
        any_pair = true;
      }
    }
  }
  for (int j = 0; j < cols; ++j) result.fp += det_overlaps_any[j] ? 0 : 1;
  if (!any_pair) {
    result.fn = rows;
    return result;
  }
  // Each admissible pair is worth more than any total overlap, so the number of
  // matches dominates and total overlap breaks ties.
  const double bonus = static_cast<double>(std::min(rows, cols)) + 1.0;
  std::vector<std::vector<double>> weight(rows, std::vector<double>(cols, 0.0));
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (ratio[i][j] >= tau) weight[i][j] = bonus + ratio[i][j];
  const auto assignment = max_weight_assignment(weight, rows, cols);
  for (int i = 0; i < rows; ++i) {
    const int j = assignment[i];
    if (j >= 0 && ratio[i][j] >= tau) {
      ++result.tp;
      result.tp_overlaps.push_back(ratio[i][j]);
    } else {
      ++result.fn;
    }
  }
  return result;
}

double f1_score(double precision, double recall) noexcept {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

Metrics aggregate_metrics(std::span<const MatchResult> results) {
  Metrics m;
  double overlap_sum = 0.0;
  std::size_t overlap_count = 0;
  for (const auto& r : results) {
    m.tp += r.tp;
    m.fp += r.fp;
    m.fn += r.fn;
    for (double o : r.tp_overlaps) overlap_sum += o;
    overlap_count += r.tp_overlaps.size();
  }
  m.pr = (m.tp + m.fp) > 0 ? static_cast<double>(m.tp) / (m.tp + m.fp) : 0.0;
  m.r = (m.tp + m.fn) > 0 ? static_cast<double>(m.tp) / (m.tp + m.fn) : 0.0;
  m.f1 = f1_score(m.pr, m.r);
  m.o_r = overlap_count > 0 ? overlap_sum / static_cast<double>(overlap_count) : 0.0;
  return m;
}

SequenceReport evaluate_sequence(std::string name, std::span<const std::vector<BoundingBox>> gt,
                                 std::span<const std::vector<BoundingBox>> det, double tau, int warmup) {
  if (gt.size() != det.size()) {
    throw FormatError("evaluate_sequence: ground truth and detections cover different frame counts");
  }
  std::vector<MatchResult> per_frame;
  for (std::size_t i = static_cast<std::size_t>(std::max(0, warmup)); i < gt.size(); ++i) {
    per_frame.push_back(match_frame(gt[i], det[i], tau));
  }
  return {std::move(name), aggregate_metrics(per_frame), static_cast<int>(per_frame.size())};
}

Metrics average_metrics(std::span<const SequenceReport> reports) {
  Metrics avg;
  if (reports.empty()) return avg;
  for (const auto& r : reports) {
    avg.o_r += r.metrics.o_r;
    avg.pr += r.metrics.pr;
    avg.r += r.metrics.r;
    avg.f1 += r.metrics.f1;
    avg.tp += r.metrics.tp;
    avg.fp += r.metrics.fp;
    avg.fn += r.metrics.fn;
  }
  const double n = static_cast<double>(reports.size());
  avg.o_r /= n;
  avg.pr /= n;
  avg.r /= n;
  avg.f1 /= n;
  return avg;
}

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

void write_report_table(std::ostream& out, std::span<const SequenceReport> reports) {
  std::vector<std::string> headers;
  std::vector<Metrics> columns;
  for (const auto& r : reports) {
    headers.push_back(r.name);
    columns.push_back(r.metrics);
  }
  if (reports.size() > 1) {
    headers.emplace_back("Average");
    columns.push_back(average_metrics(reports));
  }
  std::size_t width = 8;
  for (const auto& h : headers) width = std::max(width, h.size() + 2);
  auto pad = [&](const std::string& s) { return s + std::string(width - std::min(width, s.size()), ' '); };

  out << pad("");
  for (const auto& h : headers) out << pad(h);
  out << '\n';
  const struct {
    const char* label;
    double Metrics::*field;
  } rows[] = {{"O_r", &Metrics::o_r}, {"Pr", &Metrics::pr}, {"R", &Metrics::r}, {"F1", &Metrics::f1}};
  for (const auto& row : rows) {
    out << pad(row.label);
    for (const auto& c : columns) out << pad(fixed4(c.*row.field));
    out << '\n';
  }
}

void write_report_csv(std::ostream& out, std::span<const SequenceReport> reports) {
  out << "sequence,frames,tp,fp,fn,o_r,pr,r,f1\n";
  auto record = [&](const std::string& name, int frames, const Metrics& m) {
    out << name << ',' << frames << ',' << m.tp << ',' << m.fp << ',' << m.fn << ',' << fixed4(m.o_r) << ','
        << fixed4(m.pr) << ',' << fixed4(m.r) << ',' << fixed4(m.f1) << '\n';
  };
  int frames = 0;
  for (const auto& r : reports) {
    record(r.name, r.frames, r.metrics);
    frames += r.frames;
  }
  if (!reports.empty()) record("average", frames, average_metrics(reports));
}

}  // namespace movdet
