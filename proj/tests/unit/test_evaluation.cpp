#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "movdet/evaluation.hpp"

using namespace movdet;

namespace {

struct Best {
  int matches = 0;
  double overlap = 0.0;
};

// Every injective partial assignment of ground truth to detections.
void search(const std::vector<BoundingBox>& gt, const std::vector<BoundingBox>& det, double tau, std::size_t i,
            std::vector<bool>& used, int matches, double overlap, Best& best) {
  if (i == gt.size()) {
    if (matches > best.matches || (matches == best.matches && overlap > best.overlap + 1e-12))
      best = {matches, overlap};
    return;
  }
  search(gt, det, tau, i + 1, used, matches, overlap, best);
  for (std::size_t j = 0; j < det.size(); ++j) {
    const double r = overlap_ratio(gt[i], det[j]);
    if (used[j] || r < tau) continue;
    used[j] = true;
    search(gt, det, tau, i + 1, used, matches + 1, overlap + r, best);
    used[j] = false;
  }
}

std::vector<BoundingBox> random_boxes(std::mt19937& rng, int n) {
  std::vector<BoundingBox> out;
  for (int i = 0; i < n; ++i)
    out.push_back({static_cast<int>(rng() % 30), static_cast<int>(rng() % 30), 2 + static_cast<int>(rng() % 15),
                   2 + static_cast<int>(rng() % 15)});
  return out;
}

}  // namespace

TEST_CASE("overlap ratio is relative to the ground-truth area") {
  const BoundingBox gt{0, 0, 10, 10};
  CHECK(overlap_ratio(gt, gt) == 1.0);
  CHECK(overlap_ratio(gt, {20, 20, 5, 5}) == 0.0);
  CHECK(overlap_ratio(gt, {0, 0, 5, 10}) == 0.5);
  CHECK(overlap_ratio(gt, {-10, -10, 40, 40}) == 1.0);
}

TEST_CASE("match examples") {
  CHECK(match_frame({}, {}).tp == 0);
  const std::vector<BoundingBox> gt{{0, 0, 10, 10}};
  const auto quarter = match_frame(gt, std::vector<BoundingBox>{{0, 0, 5, 5}});
  CHECK(quarter.tp == 1);
  CHECK(quarter.tp_overlaps == std::vector<double>{0.25});
  const auto twice = match_frame(gt, std::vector<BoundingBox>{{0, 0, 5, 10}, {5, 0, 5, 10}});
  CHECK(twice.tp == 1);
  CHECK(twice.fp == 0);
  CHECK(twice.fn == 0);
  const auto miss = match_frame(gt, std::vector<BoundingBox>{{0, 0, 10, 1}, {50, 50, 3, 3}});
  CHECK(miss.tp == 0);
  CHECK(miss.fp == 2);
  CHECK(miss.fn == 1);
  CHECK_THROWS(match_frame(gt, gt, 0.0));
}

TEST_CASE("assignment equals exhaustive search on small sets") {
  std::mt19937 rng(1);
  for (int trial = 0; trial < 3000; ++trial) {
    const auto gt = random_boxes(rng, static_cast<int>(rng() % 5));
    const auto det = random_boxes(rng, static_cast<int>(rng() % 5));
    const auto r = match_frame(gt, det, 0.2);
    Best best;
    std::vector<bool> used(det.size());
    search(gt, det, 0.2, 0, used, 0, 0.0, best);
    REQUIRE(r.tp == best.matches);
    REQUIRE(std::accumulate(r.tp_overlaps.begin(), r.tp_overlaps.end(), 0.0) ==
            doctest::Approx(best.overlap).epsilon(1e-12));
    CHECK(r.fn == static_cast<int>(gt.size()) - r.tp);
    CHECK(r.tp == static_cast<int>(r.tp_overlaps.size()));
    for (double o : r.tp_overlaps) CHECK(o >= 0.2);
    int lonely = 0;
    for (const auto& d : det)
      lonely += std::none_of(gt.begin(), gt.end(), [&](const auto& g) { return overlap_ratio(g, d) >= 0.2; });
    CHECK(r.fp == lonely);
  }
}

TEST_CASE("matching ignores input order") {
  std::mt19937 rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    auto gt = random_boxes(rng, 1 + static_cast<int>(rng() % 6));
    auto det = random_boxes(rng, 1 + static_cast<int>(rng() % 6));
    auto a = match_frame(gt, det);
    std::shuffle(gt.begin(), gt.end(), rng);
    std::shuffle(det.begin(), det.end(), rng);
    auto b = match_frame(gt, det);
    CHECK(a.tp == b.tp);
    CHECK(a.fp == b.fp);
    CHECK(a.fn == b.fn);
    CHECK(std::accumulate(a.tp_overlaps.begin(), a.tp_overlaps.end(), 0.0) ==
          doctest::Approx(std::accumulate(b.tp_overlaps.begin(), b.tp_overlaps.end(), 0.0)));
  }
}

TEST_CASE("pooled metrics") {
  CHECK(f1_score(0.7713, 0.9123) == doctest::Approx(0.8359).epsilon(0.0005 / 0.8359));
  CHECK(f1_score(0.0, 0.0) == 0.0);
  const std::vector<MatchResult> perfect{{3, 0, 0, {1.0, 0.5, 0.75}}, {2, 0, 0, {1.0, 1.0}}};
  const auto m = aggregate_metrics(perfect);
  CHECK(m.pr == 1.0);
  CHECK(m.r == 1.0);
  CHECK(m.f1 == 1.0);
  CHECK(m.o_r == doctest::Approx(4.25 / 5));
  const auto none = aggregate_metrics(std::vector<MatchResult>{{0, 0, 10, {}}});
  CHECK(none.pr == 0.0);
  CHECK(none.r == 0.0);
  CHECK(none.f1 == 0.0);

  std::mt19937 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<MatchResult> rs;
    for (int k = 0; k < 4; ++k) {
      MatchResult r;
      r.tp = static_cast<int>(rng() % 4);
      r.fp = static_cast<int>(rng() % 4);
      r.fn = static_cast<int>(rng() % 4);
      for (int i = 0; i < r.tp; ++i) r.tp_overlaps.push_back(0.2 + 0.8 * (rng() % 100) / 99.0);
      rs.push_back(r);
    }
    const auto a = aggregate_metrics(rs);
    for (double v : {a.pr, a.r, a.f1, a.o_r}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(a.f1 <= std::max(a.pr, a.r) + 1e-15);
    CHECK((a.f1 == 0.0) == (a.tp == 0));
  }
}

TEST_CASE("sequence evaluation skips warmup and reports") {
  const std::vector<std::vector<BoundingBox>> gt{{{0, 0, 4, 4}}, {{0, 0, 4, 4}}, {{0, 0, 4, 4}}};
  const std::vector<std::vector<BoundingBox>> det{{}, {{0, 0, 4, 4}}, {{0, 0, 4, 4}, {20, 20, 2, 2}}};
  const auto all = evaluate_sequence("s", gt, det);
  CHECK(all.metrics.tp == 2);
  CHECK(all.metrics.fn == 1);
  CHECK(all.metrics.fp == 1);
  const auto warm = evaluate_sequence("s", gt, det, 0.2, 1);
  CHECK(warm.frames == 2);
  CHECK(warm.metrics.fn == 0);

  std::ostringstream table, csv;
  write_report_table(table, std::vector<SequenceReport>{warm, all});
  write_report_csv(csv, std::vector<SequenceReport>{warm});
  for (const char* row : {"O_r", "Pr", "R", "F1", "Average"}) CHECK(table.str().find(row) != std::string::npos);
  CHECK(csv.str().rfind("sequence,frames,tp,fp,fn,o_r,pr,r,f1", 0) == 0);
}
