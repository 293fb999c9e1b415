#include <algorithm>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "movdet/background_model.hpp"

using namespace movdet;

namespace {

BackgroundModel aged_model(int w, int h, std::uint16_t age, std::mt19937& rng) {
  BackgroundModel m{test::random_plane<float>(w, h, rng, 0, 255), test::random_plane<float>(w, h, rng, 0, 255),
                    AgePlane(w, h, age)};
  for (auto& a : m.age.values()) a = static_cast<std::uint16_t>(1 + rng() % 30);
  return m;
}

}  // namespace

TEST_CASE("init copies the frame and zeroes ages") {
  std::mt19937 rng(1);
  const auto s = test::random_plane<std::uint8_t>(9, 7, rng, 0, 255);
  const auto v = test::random_plane<std::uint8_t>(9, 7, rng, 0, 255);
  const auto m = init_model(s, v);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(m.mu_s.values()[i] == s.values()[i]);
    CHECK(m.mu_v.values()[i] == v.values()[i]);
    CHECK(m.age.values()[i] == 0);
  }
}

TEST_CASE("warp with identity leaves the model alone") {
  std::mt19937 rng(2);
  const auto m = aged_model(20, 10, 5, rng);
  const auto w = warp_model(m, Homography::identity());
  CHECK(w.mu_s == m.mu_s);
  CHECK(w.mu_v == m.mu_v);
  CHECK(w.age == m.age);
}

TEST_CASE("translation resets exactly the uncovered strip") {
  std::mt19937 rng(3);
  const auto m = aged_model(50, 20, 5, rng);
  const auto w = warp_model(m, Homography::translation(10, 0));
  int bad = 0;
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 50; ++x) {
      if (x < 10) {
        bad += w.age(x, y) != 0;
      } else {
        bad += w.age(x, y) != m.age(x - 10, y) || w.mu_v(x, y) != m.mu_v(x - 10, y);
      }
    }
  CHECK(bad == 0);
}

TEST_CASE("fused warp equals warping each plane separately") {
  std::mt19937 rng(4);
  const auto m = aged_model(64, 48, 5, rng);
  const Homography h(std::array<double, 9>{0.99, 0.04, 3.7, -0.03, 1.02, -2.2, 1e-4, 5e-5, 1.0});
  const auto w = warp_model(m, h);
  const SourceMap map(64, 48, h);
  const auto s = remap(m.mu_s, map, Interpolation::bilinear);
  const auto v = remap(m.mu_v, map, Interpolation::bilinear);
  const auto a = remap(m.age, map, Interpolation::nearest);
  CHECK(w.mu_s == s.image);
  CHECK(w.mu_v == v.image);
  int bad = 0;
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) bad += w.age(x, y) != (v.valid(x, y) ? a.image(x, y) : 0);
  CHECK(bad == 0);
  // Warping cannot raise a counter.
  const auto old_max = *std::max_element(m.age.values().begin(), m.age.values().end());
  CHECK(*std::max_element(w.age.values().begin(), w.age.values().end()) <= old_max);
}

TEST_CASE("update follows the running-mean rule") {
  BackgroundModel m{ModelPlane(2, 1, 60.0f), ModelPlane(2, 1, 60.0f), AgePlane(2, 1, 30)};
  m.age(1, 0) = 0;
  const ImagePlane in(2, 1, 90);
  const auto u = update_model(m, in, in, 30);
  CHECK(u.age(0, 0) == 30);
  CHECK(u.mu_v(0, 0) == doctest::Approx(61.0).epsilon(1e-6));
  CHECK(u.mu_s(0, 0) == doctest::Approx(61.0).epsilon(1e-6));
  CHECK(u.age(1, 0) == 1);
  CHECK(u.mu_v(1, 0) == 90.0f);
  CHECK_THROWS_AS(update_model(m, ImagePlane(3, 1), in, 30), DimensionError);
  CHECK_THROWS(update_model(m, in, in, 0));
}

TEST_CASE("means stay inside the range of observations") {
  std::mt19937 rng(5);
  const int w = 16, h = 8;
  std::uniform_int_distribution<int> px(0, 255);
  ImagePlane s(w, h), v(w, h);
  for (auto& x : v.values()) x = static_cast<std::uint8_t>(px(rng));
  s = v;
  auto m = init_model(s, v);
  std::vector<int> lo(v.values().begin(), v.values().end()), hi = lo;
  int age_violations = 0;
  for (int t = 0; t < 80; ++t) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      v.values()[i] = static_cast<std::uint8_t>(px(rng));
      lo[i] = std::min<int>(lo[i], v.values()[i]);
      hi[i] = std::max<int>(hi[i], v.values()[i]);
    }
    const auto before = m.age;
    m = update_model(std::move(m), v, v, 30);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const float mu = m.mu_v.values()[i];
      CHECK(mu >= static_cast<float>(lo[i]));
      CHECK(mu <= static_cast<float>(hi[i]));
      age_violations += m.age.values()[i] < before.values()[i] || m.age.values()[i] > 30;
    }
  }
  CHECK(age_violations == 0);
}

TEST_CASE("constant input converges monotonically") {
  std::mt19937 rng(6);
  const auto target = test::random_plane<std::uint8_t>(12, 9, rng, 0, 255);
  BackgroundModel m{test::random_plane<float>(12, 9, rng, 0, 255), test::random_plane<float>(12, 9, rng, 0, 255),
                    AgePlane(12, 9, 0)};
  for (std::size_t i = 0; i < m.age.size(); i += 3) m.age.values()[i] = 12;
  double prev = 1e9;
  for (int t = 0; t < 40; ++t) {
    m = update_model(std::move(m), target, target, 30);
    double worst = 0;
    for (std::size_t i = 0; i < target.size(); ++i)
      worst = std::max(worst, std::abs(double(m.mu_v.values()[i]) - target.values()[i]));
    CHECK(worst <= prev);
    prev = worst;
  }
  // Fresh pixels take the observation exactly.
  CHECK(m.mu_v(1, 0) == target(1, 0));
}
