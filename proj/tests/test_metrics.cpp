#include "pulmofuse/metrics.hpp"

#include <cmath>

#include "doctest.h"
#include "pulmofuse/errors.hpp"
#include "pulmofuse/morphology.hpp"
#include "pulmofuse/synth.hpp"
#include "support/oracles.hpp"

using namespace pulmofuse;

namespace {

Phantom make_bifurcation() {
  PhantomSpec spec = phantom_preset("y-bifurcation");
  spec.noise_sigma_hu = 0.0;
  return rasterize_phantom(spec);
}

}  // namespace

TEST_CASE("dice basics") {
  MaskGrid a(Shape3{4, 4, 4});
  for (int i = 0; i < 3; ++i) a(i, 0, 0) = 1;

  SUBCASE("identical non-empty masks score 1") { CHECK(dice(a, a) == 1.0); }

  SUBCASE("disjoint masks score 0") {
    MaskGrid b(Shape3{4, 4, 4});
    b(0, 3, 3) = 1;
    CHECK(dice(a, b) == 0.0);
  }

  SUBCASE("3x3 blocks shifted by one voxel overlap 6 of 9") {
    MaskGrid p(Shape3{8, 8, 1});
    MaskGrid q(Shape3{8, 8, 1});
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 3; ++x) {
        p(x, y, 0) = 1;
        q(x + 1, y, 0) = 1;  // |A| = |B| = 9, intersection 6
      }
    CHECK(dice(p, q) == doctest::Approx(2.0 * 6 / 18).epsilon(1e-12));
  }

  SUBCASE("two empty masks score 1 by convention") {
    const MaskGrid e(Shape3{2, 2, 2});
    CHECK(dice(e, e) == 1.0);
  }

  SUBCASE("shape mismatch is rejected") {
    CHECK_THROWS_AS(dice(a, MaskGrid(Shape3{4, 4, 3})), Error);
  }

  SUBCASE("symmetry and range on random masks") {
    for (int trial = 0; trial < 40; ++trial) {
      const MaskGrid x = testsupport::random_mask(Shape3{6, 6, 6}, 0.3, trial);
      const MaskGrid y =
          testsupport::random_mask(Shape3{6, 6, 6}, 0.3, 500 + trial);
      const double d = dice(x, y);
      CHECK(d == dice(y, x));
      CHECK(d >= 0.0);
      CHECK(d <= 1.0);
    }
  }
}

TEST_CASE("multi-level dice on a perfect prediction is 1 everywhere") {
  const Phantom ph = make_bifurcation();
  for (const double wb : {0.6, 0.75, 0.9}) {
    const DiceReport r =
        multi_level_dice(ph.mask, ph.mask, ph.regions, Spacing3{1, 1, 1}, wb);
    CHECK(r.overall_dice == 1.0);
    CHECK(r.main_dice == 1.0);
    CHECK(r.branch_dice == 1.0);
    CHECK(r.multi_level_dice == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.w_branch == wb);
    CHECK(std::abs(r.multi_level_dice -
                   (wb * r.branch_dice + (1 - wb) * r.main_dice)) <= 1e-12);
  }
}

TEST_CASE("deleting all branches zeroes the branch term only") {
  const Phantom ph = make_bifurcation();
  MaskGrid pred = ph.mask;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (ph.regions[i] == kRegionBranch) pred[i] = 0;

  const double wb = 0.6;
  const DiceReport r =
      multi_level_dice(pred, ph.mask, ph.regions, Spacing3{1, 1, 1}, wb);
  CHECK(r.branch_dice == 0.0);
  CHECK(r.main_dice == 1.0);  // trunk untouched, all its voxels stay main
  CHECK(r.multi_level_dice == doctest::Approx((1 - wb) * r.main_dice));
}

TEST_CASE("empty prediction scores zero against a non-empty truth") {
  const Phantom ph = make_bifurcation();
  const MaskGrid empty(ph.mask.shape());
  const DiceReport r =
      multi_level_dice(empty, ph.mask, ph.regions, Spacing3{1, 1, 1});
  CHECK(r.overall_dice == 0.0);
  CHECK(r.main_dice == 0.0);
  CHECK(r.branch_dice == 0.0);
  CHECK(r.multi_level_dice == 0.0);
}

TEST_CASE("weight gate and partition gate") {
  const Phantom ph = make_bifurcation();
  for (const double bad : {0.5, 1.0, 0.4, -0.1}) {
    try {
      multi_level_dice(ph.mask, ph.mask, ph.regions, Spacing3{1, 1, 1}, bad);
      FAIL("expected WeightOutOfRange");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::weight_out_of_range);
    }
  }

  RegionGrid broken = ph.regions;
  broken(0, 0, 0) = kRegionMain;  // label on background
  try {
    multi_level_dice(ph.mask, ph.mask, broken, Spacing3{1, 1, 1});
    FAIL("expected RegionNotPartition");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::region_not_partition);
  }

  RegionGrid missing = ph.regions;
  for (std::size_t i = 0; i < missing.size(); ++i)
    if (ph.mask[i]) {
      missing[i] = kRegionBackground;  // foreground without a region
      break;
    }
  CHECK_THROWS_AS(
      multi_level_dice(ph.mask, ph.mask, missing, Spacing3{1, 1, 1}), Error);
}

TEST_CASE("equal weights reduce to the plain mean of region dices") {
  for (int trial = 0; trial < 20; ++trial) {
    const double main = 0.01 * (trial * 7 % 100);
    const double branch = 0.01 * (trial * 13 % 100);
    CHECK(std::abs(weighted_region_dice(main, branch, 0.5) -
                   0.5 * (main + branch)) <= 1e-12);
  }
}

TEST_CASE("multi-level dice is monotone in both region dices") {
  const double wb = 0.6;
  CHECK(weighted_region_dice(0.5, 0.5, wb) < weighted_region_dice(0.6, 0.5, wb));
  CHECK(weighted_region_dice(0.5, 0.5, wb) < weighted_region_dice(0.5, 0.6, wb));
}

TEST_CASE("largest-component filtering trades branches for the main artery") {
  const Phantom ph = make_bifurcation();
  const Spacing3 sp{1, 1, 1};

  SUBCASE("a detached false positive near the trunk hurts until CCA removes it") {
    MaskGrid pred = ph.mask;
    // false-positive blob in free air
    for (int dz = 0; dz < 3; ++dz)
      for (int dy = 0; dy < 3; ++dy)
        for (int dx = 0; dx < 3; ++dx) pred(3 + dx, 3 + dy, 8 + dz) = 1;

    const auto [before, after] =
        cca_tradeoff_report(pred, ph.mask, ph.regions, sp);
    CHECK(after.main_dice > before.main_dice);
    CHECK(after.main_dice == 1.0);
  }

  SUBCASE("a disconnected true branch segment is lost to CCA") {
    MaskGrid pred = ph.mask;
    // erosion noise: cut a band out of both branches, detaching their tips
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const Voxel v = pred.unravel(i);
      if (ph.regions[i] == kRegionBranch && v[2] >= 48 && v[2] <= 49)
        pred[i] = 0;
    }
    const auto [before, after] =
        cca_tradeoff_report(pred, ph.mask, ph.regions, sp);
    CHECK(after.branch_dice < before.branch_dice);
  }

  SUBCASE("a single-component prediction is untouched") {
    MaskGrid pred = ph.mask;
    const auto [before, after] =
        cca_tradeoff_report(pred, ph.mask, ph.regions, sp);
    CHECK(before.main_dice == after.main_dice);
    CHECK(before.branch_dice == after.branch_dice);
    CHECK(before.multi_level_dice == after.multi_level_dice);
  }
}

TEST_CASE("report averaging") {
  DiceReport a;
  a.overall_dice = 0.7;
  a.main_dice = 0.9;
  a.branch_dice = 0.75;
  a.multi_level_dice = 0.8;
  a.w_branch = 0.6;
  a.w_main = 0.4;
  DiceReport b = a;
  b.multi_level_dice = 0.9;

  SUBCASE("single report averages to itself") {
    const DiceReport m = average_reports(std::vector<DiceReport>{a});
    CHECK(m.multi_level_dice == a.multi_level_dice);
  }
  SUBCASE("two reports average fieldwise") {
    const DiceReport m = average_reports(std::vector<DiceReport>{a, b});
    CHECK(m.multi_level_dice == doctest::Approx(0.85).epsilon(1e-12));
    const DiceReport p = average_reports(std::vector<DiceReport>{b, a});
    CHECK(p.multi_level_dice == m.multi_level_dice);
  }
  SUBCASE("an empty list is rejected") {
    try {
      average_reports(std::vector<DiceReport>{});
      FAIL("expected EmptyList");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::empty_list);
    }
  }
  SUBCASE("mixed weights are rejected") {
    DiceReport c = a;
    c.w_branch = 0.7;
    CHECK_THROWS_AS(average_reports(std::vector<DiceReport>{a, c}), Error);
  }
}
