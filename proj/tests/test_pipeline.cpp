#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "hsid/error.hpp"
#include "hsid/pipeline.hpp"
#include "test_util.hpp"

using namespace hsid;
using namespace hsid::testing;

namespace {

std::vector<std::size_t> iota(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> v;
  for (std::size_t i = lo; i <= hi; ++i) v.push_back(i);
  return v;
}

// Corner-aligned bilinear resample of one plane, interpolating along y first.
double bilinear_oracle(const HsiCube& c, std::size_t b, std::size_t ox, std::size_t oy, std::size_t ow, std::size_t oh) {
  const double sx = static_cast<double>(ox) * static_cast<double>(c.width() - 1) / static_cast<double>(ow - 1);
  const double sy = static_cast<double>(oy) * static_cast<double>(c.height() - 1) / static_cast<double>(oh - 1);
  const auto xl = static_cast<std::size_t>(sx), yl = static_cast<std::size_t>(sy);
  const std::size_t xr = std::min(xl + 1, c.width() - 1), yr = std::min(yl + 1, c.height() - 1);
  const double ax = sx - static_cast<double>(xl), ay = sy - static_cast<double>(yl);
  const double left = c.at(xl, yl, b) + ay * (static_cast<double>(c.at(xl, yr, b)) - c.at(xl, yl, b));
  const double right = c.at(xr, yl, b) + ay * (static_cast<double>(c.at(xr, yr, b)) - c.at(xr, yl, b));
  return left + ax * (right - left);
}

std::vector<float> sorted_band(const HsiCube& c, std::size_t b) {
  std::vector<float> v(c.band(b).begin(), c.band(b).end());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("normalize_bands: affine map, identity and constant bands") {
  HsiCube c(3, 1, 3);
  c.at(0, 0, 0) = 10.0f;
  c.at(1, 0, 0) = 20.0f;
  c.at(2, 0, 0) = 30.0f;
  c.at(0, 0, 1) = 0.0f;
  c.at(1, 0, 1) = 0.25f;
  c.at(2, 0, 1) = 1.0f;
  for (std::size_t x = 0; x < 3; ++x) c.at(x, 0, 2) = 7.0f;

  WarningCapture warnings;
  const NormalizedCube n = normalize_bands(c);
  CHECK(std::vector<float>(n.cube.band(0).begin(), n.cube.band(0).end()) == std::vector<float>{0.0f, 0.5f, 1.0f});
  CHECK(std::equal(n.cube.band(1).begin(), n.cube.band(1).end(), c.band(1).begin()));
  CHECK(std::all_of(n.cube.band(2).begin(), n.cube.band(2).end(), [](float v) { return v == 0.0f; }));
  REQUIRE(warnings.messages.size() == 1);
  CHECK(warnings.messages[0].find("band 2") != std::string::npos);
  CHECK(n.ranges[0].min == 10.0f);
  CHECK(n.ranges[0].max == 30.0f);
  CHECK(n.ranges[2].constant);

  const HsiCube back = denormalize(n.cube, n.ranges);
  CHECK(back.at(1, 0, 0) == 20.0f);
}

TEST_CASE("normalize_bands is idempotent on normalised cubes") {
  const NormalizedCube once = normalize_bands(random_cube(9, 7, 4, 3, -5.0, 40.0));
  const NormalizedCube twice = normalize_bands(once.cube);
  for (std::size_t i = 0; i < once.cube.values().size(); ++i) {
    CHECK(std::abs(twice.cube.values()[i] - once.cube.values()[i]) <= 1e-12);
  }
  for (std::size_t b = 0; b < 4; ++b) {
    const auto [lo, hi] = std::minmax_element(once.cube.band(b).begin(), once.cube.band(b).end());
    CHECK(*lo == 0.0f);
    CHECK(*hi == 1.0f);
  }
}

TEST_CASE("normalize_global uses one range for the cube") {
  HsiCube c(2, 1, 2);
  c.at(0, 0, 0) = 0.0f;
  c.at(1, 0, 0) = 2.0f;
  c.at(0, 0, 1) = 4.0f;
  c.at(1, 0, 1) = 8.0f;
  const NormalizedCube n = normalize(c, NormalizeMode::Global);
  CHECK(n.cube.at(1, 0, 0) == 0.25f);
  CHECK(n.cube.at(0, 0, 1) == 0.5f);
  CHECK(normalize(c, NormalizeMode::None).cube == c);
}

TEST_CASE("adjacent bands: interior and edge windows") {
  auto expected = iota(83, 94);
  const auto upper = iota(96, 107);
  expected.insert(expected.end(), upper.begin(), upper.end());
  CHECK(adjacent_band_indices(191, 95, 24) == expected);
  CHECK(adjacent_band_indices(191, 0, 24) == iota(1, 24));
  CHECK(adjacent_band_indices(191, 190, 24) == iota(166, 189));
  auto near_top = iota(166, 188);
  near_top.push_back(190);
  CHECK(adjacent_band_indices(191, 189, 24) == near_top);
  CHECK_THROWS_AS(adjacent_band_indices(24, 3, 24), Error);
  CHECK_THROWS_AS(adjacent_band_indices(30, 30, 4), Error);
}

TEST_CASE("adjacent bands: exhaustive over B <= 64") {
  for (std::size_t B = 2; B <= 64; ++B)
    for (std::size_t K = 1; K < B; ++K)
      for (std::size_t k = 0; k < B; ++k) {
        const auto idx = adjacent_band_indices(B, k, K);
        REQUIRE(idx.size() == K);
        REQUIRE(std::is_sorted(idx.begin(), idx.end()));
        REQUIRE(std::set<std::size_t>(idx.begin(), idx.end()).size() == K);
        REQUIRE(std::find(idx.begin(), idx.end(), k) == idx.end());
        REQUIRE(idx.back() < B);
        // The window is contiguous apart from the current band.
        REQUIRE(idx.back() - idx.front() + 1 == K + (idx.front() < k && k < idx.back() ? 1 : 0));
      }
}

TEST_CASE("B = K + 1: every window is the full complement") {
  for (std::size_t k = 0; k < 5; ++k) {
    auto idx = adjacent_band_indices(5, k, 4);
    std::vector<std::size_t> all{0, 1, 2, 3, 4};
    all.erase(all.begin() + static_cast<long>(k));
    CHECK(idx == all);
  }
}

TEST_CASE("adjacent_bands tensor gathers the indexed bands") {
  const HsiCube c = random_cube(5, 4, 10, 8);
  const TensorD t = adjacent_bands<double>(c, 9, 4);
  CHECK(t.shape() == Shape{4, 4, 5});
  CHECK(t.at(0, 2, 3) == static_cast<double>(c.at(3, 2, 5)));
  CHECK(t.at(3, 1, 1) == static_cast<double>(c.at(1, 1, 8)));
}

TEST_CASE("patch counts follow the closed form") {
  CHECK(expected_patch_count(200, 200, 191, {}) == 19100);
  for (auto [w, h, p, s] : {std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>{45, 33, 20, 20},
                            {45, 33, 20, 7},
                            {20, 21, 20, 1},
                            {64, 64, 8, 8}}) {
    const HsiCube c = random_cube(w, h, 3, 1);
    const auto samples = extract_patches(c, c, {p, s}, 2);
    CHECK(samples.size() == expected_patch_count(w, h, 3, {p, s}));
    CHECK(samples.size() == 3 * ((w - p) / s + 1) * ((h - p) / s + 1));
  }
}

TEST_CASE("patch extraction on a 200x200x191 frame") {
  const HsiCube c(200, 200, 191, 0.5f);
  PatchDataset d;
  d.add_pair(std::make_shared<HsiCube>(c), std::make_shared<HsiCube>(c), {}, 24);
  CHECK(d.size() == 19100);
}

TEST_CASE("a 20x20 frame yields one full-frame sample per band") {
  const HsiCube clean = random_cube(20, 20, 6, 1);
  const HsiCube noisy = random_cube(20, 20, 6, 2);
  const auto s = extract_patches(noisy, clean, {}, 4);
  REQUIRE(s.size() == 6);
  for (std::size_t b = 0; b < 6; ++b) {
    CHECK(s[b].band == b);
    CHECK(s[b].y_spatial.shape() == Shape{1, 20, 20});
    CHECK(s[b].y_spectral.shape() == Shape{4, 20, 20});
    CHECK(s[b].y_spatial.at(0, 7, 3) == noisy.at(3, 7, b));
    CHECK(s[b].label_clean.at(0, 7, 3) == clean.at(3, 7, b));
    const auto idx = adjacent_band_indices(6, b, 4);
    CHECK(s[b].y_spectral.at(1, 19, 0) == noisy.at(0, 19, idx[1]));
  }
}

TEST_CASE("patch larger than the frame: empty with a warning") {
  const HsiCube c(19, 40, 3, 0.0f);
  WarningCapture warnings;
  CHECK(extract_patches(c, c, {}, 2).empty());
  CHECK(warnings.messages.size() == 1);
  CHECK_THROWS_AS(extract_patches(c, HsiCube(19, 41, 3), {}, 2), Error);
}

TEST_CASE("dataset samples match eager extraction") {
  const HsiCube clean = random_cube(50, 44, 7, 1);
  const HsiCube noisy = random_cube(50, 44, 7, 2);
  const auto eager = extract_patches(noisy, clean, {20, 10}, 4);
  PatchDataset d;
  d.add_pair(std::make_shared<HsiCube>(noisy), std::make_shared<HsiCube>(clean), {20, 10}, 4);
  REQUIRE(d.size() == eager.size());
  for (std::size_t i = 0; i < eager.size(); ++i) {
    const auto s = d.at(i);
    CHECK(s.y_spatial == eager[i].y_spatial);
    CHECK(s.y_spectral == eager[i].y_spectral);
    CHECK(s.label_clean == eager[i].label_clean);
  }
}

TEST_CASE("rotation: four quarter turns are the identity and preserve values") {
  const HsiCube c = random_cube(7, 4, 3, 21);
  const HsiCube r1 = rotate90(c, 1);
  CHECK(r1.width() == 4);
  CHECK(r1.height() == 7);
  // Counter-clockwise: the top-right corner moves to the top-left.
  CHECK(r1.at(0, 0, 1) == c.at(6, 0, 1));
  CHECK(r1.at(0, 6, 1) == c.at(0, 0, 1));
  CHECK(rotate90(rotate90(rotate90(r1, 1), 1), 1) == c);
  CHECK(rotate90(c, 4) == c);
  CHECK(rotate90(c, -1) == rotate90(c, 3));
  for (int q = 0; q < 4; ++q)
    for (std::size_t b = 0; b < 3; ++b) CHECK(sorted_band(rotate90(c, q), b) == sorted_band(c, b));
}

TEST_CASE("rescale: identity at scale 1 and bilinear oracle at 0.5") {
  const HsiCube c = random_cube(200, 200, 2, 33);
  CHECK(rescale_bilinear(c, 1.0) == c);
  const HsiCube half = rescale_bilinear(c, 0.5);
  REQUIRE(half.width() == 100);
  REQUIRE(half.height() == 100);
  double worst = 0.0;
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t y = 0; y < 100; ++y)
      for (std::size_t x = 0; x < 100; ++x) {
        const auto oracle = static_cast<float>(bilinear_oracle(c, b, x, y, 100, 100));
        worst = std::max(worst, std::abs(static_cast<double>(half.at(x, y, b)) - oracle));
      }
  CHECK(worst <= 1e-10);
  // Corners are preserved exactly.
  CHECK(half.at(0, 0, 0) == c.at(0, 0, 0));
  CHECK(half.at(99, 99, 1) == c.at(199, 199, 1));

  const HsiCube up = rescale_bilinear(random_cube(10, 6, 1, 2), 1.5);
  CHECK(up.width() == 15);
  CHECK(up.height() == 9);
}

TEST_CASE("augment: rotation-major cross product") {
  const HsiCube c = random_cube(40, 30, 2, 4);
  const auto out = augment(c, {{0, 90}, {1.0, 0.5}});
  REQUIRE(out.size() == 4);
  CHECK(out[0] == c);
  CHECK(out[1] == rescale_bilinear(c, 0.5));
  CHECK(out[2] == rotate90(c, 1));
  CHECK(out[3] == rescale_bilinear(rotate90(c, 1), 0.5));
  CHECK_THROWS_AS(augment(c, {{45}, {1.0}}), Error);
  CHECK_THROWS_AS(augment(c, {{0}, {}}), Error);
}

TEST_CASE("split: area arithmetic on a 1280x303 frame") {
  const HsiCube c(1280, 303, 1, 0.5f);
  const SpatialSplit s = split_spatial(c, {500, 50, 200, 200});
  CHECK(s.train_area == 1280 * 303 - 200 * 200);
  CHECK(s.test.width() == 200);
  CHECK(std::count(s.train_mask.begin(), s.train_mask.end(), 1) == static_cast<long>(s.train_area));
}

TEST_CASE("split: test pixels are absent from the training side") {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const HsiCube c = random_cube(23, 19, 2, 100 + static_cast<std::uint64_t>(trial), 0.5, 1.0);
    const std::size_t w = 1 + rng.below(23), h = 1 + rng.below(19);
    const Rect r{rng.below(23 - w + 1), rng.below(19 - h + 1), w, h};
    const SpatialSplit s = split_spatial(c, r);
    for (std::size_t y = 0; y < 19; ++y)
      for (std::size_t x = 0; x < 23; ++x) {
        const bool inside = x >= r.x && x < r.x + w && y >= r.y && y < r.y + h;
        REQUIRE(static_cast<bool>(s.train_mask[y * 23 + x]) == !inside);
        for (std::size_t b = 0; b < 2; ++b) {
          REQUIRE(s.train.at(x, y, b) == (inside ? 0.0f : c.at(x, y, b)));
          if (inside) REQUIRE(s.test.at(x - r.x, y - r.y, b) == c.at(x, y, b));
        }
      }
    // Windows kept for training never touch the test region.
    for (const auto& p : extract_patches(s.train, s.train, {4, 1}, 1, &s.train_mask)) {
      const bool overlaps = p.x < r.x + w && r.x < p.x + 4 && p.y < r.y + h && r.y < p.y + 4;
      REQUIRE(!overlaps);
    }
  }
}

TEST_CASE("split: whole-cube region warns and leaves no training area") {
  const HsiCube c(8, 8, 1, 0.5f);
  WarningCapture warnings;
  const SpatialSplit s = split_spatial(c, {0, 0, 8, 8});
  CHECK(s.train_area == 0);
  CHECK(warnings.messages.size() == 1);
  CHECK_THROWS_AS(split_spatial(c, {4, 4, 5, 1}), Error);
}

TEST_CASE("training set: noise is drawn after augmentation") {
  const HsiCube clean = random_cube(20, 20, 3, 5);
  TrainingSetOptions opt;
  opt.K = 2;
  opt.augment = {{0, 180}, {1.0}};
  opt.noise = {FixedNoise{25.0}, 9};
  const PatchDataset d = build_training_set({clean}, {}, opt);
  REQUIRE(d.size() == 6);

  // Labels are the augmented clean cubes.
  const HsiCube rotated = rotate90(clean, 2);
  CHECK(d.at(3).label_clean.at(0, 4, 5) == rotated.at(5, 4, 0));

  // Rotating the first sample's noise back does not reproduce the second
  // sample's noise: each augmentation carries independent noise.
  int equal = 0;
  for (std::size_t y = 0; y < 20; ++y)
    for (std::size_t x = 0; x < 20; ++x) {
      const float n0 = d.at(0).y_spatial.at(0, y, x) - d.at(0).label_clean.at(0, y, x);
      const float n1 = d.at(3).y_spatial.at(0, 19 - y, 19 - x) - d.at(3).label_clean.at(0, 19 - y, 19 - x);
      equal += n0 == n1;
    }
  CHECK(equal < 5);

  // Deterministic under the seed.
  const PatchDataset again = build_training_set({clean}, {}, opt);
  CHECK(again.at(4).y_spectral == d.at(4).y_spectral);
}

TEST_CASE("training set respects masks through augmentation") {
  const HsiCube clean = random_cube(40, 20, 3, 6);
  const SpatialSplit s = split_spatial(clean, {20, 0, 20, 20});
  TrainingSetOptions opt;
  opt.K = 2;
  opt.augment = {{0, 90, 180, 270}, {1.0}};
  const PatchDataset d = build_training_set({s.train}, {s.train_mask}, opt);
  CHECK(d.size() == 4 * 3);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto p = d.at(i);
    // No zeroed test pixels leak into the labels.
    CHECK(std::none_of(p.label_clean.values().begin(), p.label_clean.values().end(), [](float v) { return v == 0.0f; }));
  }
}
