// Acceptance suite: one check per release criterion, one PASS/FAIL line each.
// Exits non-zero when any criterion fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "pulmofuse/ensemble.hpp"
#include "pulmofuse/errors.hpp"
#include "pulmofuse/metrics.hpp"
#include "pulmofuse/morphology.hpp"
#include "pulmofuse/nifti.hpp"
#include "pulmofuse/patching.hpp"
#include "pulmofuse/synth.hpp"
#include "support/cli_runner.hpp"
#include "support/oracles.hpp"

using namespace pulmofuse;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool approx(double a, double b, double tol) { return std::abs(a - b) <= tol; }

const std::vector<double> kValidationDice = {84.30, 85.50, 85.52,
                                             86.55, 86.75, 86.87};

// --- criterion 1: weight vector against the high-precision oracle ----------

bool weight_vector_check(std::string& detail) {
  const auto start = Clock::now();
  const EnsembleWeights w = compute_weights(ModelScores{kValidationDice});
  const double elapsed = seconds_since(start);

  const long double total = 515.49L;
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double oracle = static_cast<double>(
        static_cast<long double>(kValidationDice[i]) / total);
    if (!approx(w[i], oracle, 1e-9)) {
      detail = "weight " + std::to_string(i) + " off the oracle";
      return false;
    }
    sum += w[i];
  }
  if (!approx(sum, 1.0, 1e-12)) {
    detail = "weights do not sum to 1";
    return false;
  }
  if (elapsed >= 1e-3) {
    detail = "took " + std::to_string(elapsed * 1e3) + " ms";
    return false;
  }
  return true;
}

// --- criterion 2: exhaustive vote table -------------------------------------

bool exhaustive_vote_check(std::string& detail) {
  const auto start = Clock::now();
  const int models = 6;
  const Shape3 s{64, 1, 1};
  std::vector<FloatGrid> preds(models, FloatGrid(s, 0.0f));
  for (int pattern = 0; pattern < 64; ++pattern)
    for (int m = 0; m < models; ++m)
      preds[m](pattern, 0, 0) = (pattern >> m) & 1 ? 1.0f : 0.0f;
  const MaskGrid out = fuse_and_binarize(
      preds, compute_weights(ModelScores{{1, 1, 1, 1, 1, 1}}));
  for (int pattern = 0; pattern < 64; ++pattern) {
    const int ones = std::popcount(static_cast<unsigned>(pattern));
    if (out(pattern, 0, 0) != testsupport::majority_vote(ones, models)) {
      detail = "pattern " + std::to_string(pattern) + " disagrees";
      return false;
    }
  }
  if (seconds_since(start) >= 1.0) {
    detail = "too slow";
    return false;
  }
  return true;
}

// --- criterion 3: randomized ensemble properties ----------------------------

bool ensemble_properties_check(std::string& detail) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> score_dist(0.01, 100.0);
  std::uniform_real_distribution<double> scale_dist(1e-3, 1e3);
  const Shape3 s{4, 3, 2};

  auto random_scores = [&](std::size_t n) {
    std::vector<double> d(n);
    for (auto& x : d) x = score_dist(rng);
    return d;
  };

  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 8;
    const auto d = random_scores(n);
    auto kd = d;
    const double k = scale_dist(rng);
    for (auto& x : kd) x *= k;
    const EnsembleWeights w1 = compute_weights(ModelScores{d});
    const EnsembleWeights w2 = compute_weights(ModelScores{kd});
    for (std::size_t i = 0; i < n; ++i)
      if (!approx(w1[i], w2[i], 1e-12)) {
        detail = "scale invariance failed at trial " + std::to_string(trial);
        return false;
      }
  }

  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng() % 5;
    std::vector<FloatGrid> preds;
    std::vector<double> scores = random_scores(n);
    for (std::size_t i = 0; i < n; ++i)
      preds.push_back(
          testsupport::random_float_grid(s, 10000 + trial * 8 + i));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<FloatGrid> preds_p;
    std::vector<double> scores_p;
    for (const std::size_t i : perm) {
      preds_p.push_back(preds[i]);
      scores_p.push_back(scores[i]);
    }
    if (fuse_and_binarize(preds, compute_weights(ModelScores{scores})) !=
        fuse_and_binarize(preds_p, compute_weights(ModelScores{scores_p}))) {
      detail = "permutation equivariance failed at trial " +
               std::to_string(trial);
      return false;
    }
  }

  for (int trial = 0; trial < 1000; ++trial) {
    const MaskGrid m = testsupport::random_mask(s, 0.5, 40000 + trial);
    FloatGrid soft(s);
    for (std::size_t i = 0; i < m.size(); ++i) soft[i] = m[i];
    const std::size_t n = 1 + rng() % 6;
    const std::vector<FloatGrid> preds(n, soft);
    if (fuse_and_binarize(preds,
                          compute_weights(ModelScores{random_scores(n)})) !=
        m) {
      detail = "idempotence failed at trial " + std::to_string(trial);
      return false;
    }
  }

  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng() % 5;
    std::vector<FloatGrid> preds;
    const auto scores = random_scores(n);
    for (std::size_t i = 0; i < n; ++i)
      preds.push_back(
          testsupport::random_float_grid(s, 70000 + trial * 8 + i));
    const EnsembleWeights w = compute_weights(ModelScores{scores});
    const MaskGrid before = fuse_and_binarize(preds, w);
    const std::size_t model = rng() % n;
    const std::size_t voxel = rng() % s.count();
    preds[model][voxel] =
        std::min(1.0f, preds[model][voxel] + 0.01f * (1 + rng() % 100));
    const MaskGrid after = fuse_and_binarize(preds, w);
    bool ok = true;
    for (std::size_t i = 0; i < before.size(); ++i)
      ok &= !(before[i] == 1 && after[i] == 0);
    if (!ok) {
      detail = "monotonicity failed at trial " + std::to_string(trial);
      return false;
    }
  }
  return true;
}

// --- criterion 4: NIfTI round-trip ------------------------------------------

std::vector<std::uint8_t> byteswap_nifti_file(std::vector<std::uint8_t> bytes) {
  auto swap_at = [&](std::size_t off, int width, int count) {
    for (int k = 0; k < count; ++k)
      std::reverse(bytes.begin() + off + k * width,
                   bytes.begin() + off + (k + 1) * width);
  };
  swap_at(0, 4, 1);
  swap_at(40, 2, 8);
  swap_at(68, 2, 3);
  swap_at(76, 4, 8);
  swap_at(108, 4, 3);
  swap_at(252, 2, 2);
  swap_at(280, 4, 12);
  std::int16_t bitpix;
  std::memcpy(&bitpix, bytes.data() + 72, 2);  // already swapped above
  bitpix = static_cast<std::int16_t>(((bitpix & 0xFF) << 8) |
                                     ((bitpix >> 8) & 0xFF));
  const int width = bitpix / 8;
  if (width > 1)
    swap_at(352, width, static_cast<int>((bytes.size() - 352) / width));
  return bytes;
}

bool nifti_roundtrip_check(std::string& detail) {
  std::mt19937_64 rng(11);
  const Shape3 shape{7, 6, 5};
  Geometry geom{Spacing3{0.5, 0.75, 1.25}};
  geom.affine = spacing_affine(geom.spacing);

  for (const ElementKind kind :
       {ElementKind::u8, ElementKind::i16, ElementKind::f32}) {
    Volume v;
    switch (kind) {
      case ElementKind::u8: {
        Grid3<std::uint8_t> g(shape);
        for (auto& x : g.values()) x = static_cast<std::uint8_t>(rng());
        v = Volume(std::move(g), geom);
        break;
      }
      case ElementKind::i16: {
        Grid3<std::int16_t> g(shape);
        for (auto& x : g.values()) x = static_cast<std::int16_t>(rng());
        v = Volume(std::move(g), geom);
        break;
      }
      case ElementKind::f32: {
        FloatGrid g(shape);
        std::uniform_real_distribution<float> uni(-500.0f, 500.0f);
        for (auto& x : g.values()) x = uni(rng);
        v = Volume(std::move(g), geom);
        break;
      }
    }
    for (const bool gz : {false, true}) {
      const auto bytes = write_nifti_bytes(v, gz);
      const NiftiReadResult r = read_nifti(bytes);
      if (!(r.volume == Volume(v))) {
        // geometry passes through float fields; voxels must be bit-exact
        const bool voxels_equal = r.volume.visit([&](const auto& g) {
          return v.visit([&](const auto& h) {
            if constexpr (std::is_same_v<decltype(g), decltype(h)>)
              return g == h;
            else
              return false;
          });
        });
        if (!voxels_equal) {
          detail = "voxel mismatch, kind " +
                   std::string(element_kind_name(kind)) +
                   (gz ? " (gzip)" : " (plain)");
          return false;
        }
      }
      if (!gz) {
        const NiftiReadResult swapped =
            read_nifti(byteswap_nifti_file(bytes));
        if (!(swapped.volume == r.volume)) {
          detail = "byte-order variant decodes differently";
          return false;
        }
      }
    }
  }

  // Reference fixture: field values frozen from the independent dump.
  const NiftiReadResult ref =
      read_nifti(testsupport::reference_nifti_fixture(false));
  if (ref.header.sizeof_hdr != 348 || ref.header.datatype_code != 4 ||
      ref.header.bitpix != 16 || ref.header.vox_offset != 352.0f ||
      ref.header.pixdim[1] != 0.9f || ref.header.sform_code != 1 ||
      ref.header.srow_y[3] != -20.5f ||
      std::memcmp(ref.header.magic.data(), "n+1\0", 4) != 0) {
    detail = "reference header dump mismatch";
    return false;
  }
  for (int i = 0; i < 64; ++i)
    if (ref.volume.i16()[static_cast<std::size_t>(i)] != 7 * i - 50) {
      detail = "reference voxel dump mismatch";
      return false;
    }
  return true;
}

// --- criterion 5: CCA oracle equivalence + performance gate -----------------

bool cca_oracle_check(std::string& detail) {
  const auto start = Clock::now();
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 200; ++trial) {
    const Shape3 shape{4 + static_cast<int>(rng() % 29),
                       4 + static_cast<int>(rng() % 29),
                       4 + static_cast<int>(rng() % 29)};
    const double density = 0.03 + 0.005 * (trial % 100);
    const MaskGrid m = testsupport::random_mask(shape, density, 3000 + trial);
    for (const Connectivity conn :
         {Connectivity::six, Connectivity::twenty_six}) {
      const LabelMap lm = connected_components(m, conn);
      const auto oracle =
          testsupport::flood_fill_components(m, static_cast<int>(conn));
      if (lm.component_count() != oracle.size()) {
        detail = "component count disagrees at trial " + std::to_string(trial);
        return false;
      }
      for (std::size_t k = 0; k < oracle.size(); ++k) {
        if (lm.sizes[k] != oracle[k].size()) {
          detail = "component size disagrees at trial " + std::to_string(trial);
          return false;
        }
        for (const std::size_t i : oracle[k])
          if (lm.labels[i] != k + 1) {
            detail = "partition disagrees at trial " + std::to_string(trial);
            return false;
          }
      }
    }
  }
  const double oracle_time = seconds_since(start);
  if (oracle_time >= 10.0) {
    detail = "oracle sweep took " + std::to_string(oracle_time) + " s";
    return false;
  }

  const MaskGrid big = testsupport::random_mask(Shape3{256, 256, 256}, 0.05, 99);
  const auto perf_start = Clock::now();
  const LabelMap lm = connected_components(big, Connectivity::twenty_six);
  const double perf = seconds_since(perf_start);
  if (lm.component_count() == 0 || perf >= 2.0) {
    detail = "256^3 labeling took " + std::to_string(perf) + " s";
    return false;
  }
  detail = "256^3 in " + std::to_string(perf) + " s";
  return true;
}

// --- criterion 6: distance transform oracle ---------------------------------

bool edt_oracle_check(std::string& detail) {
  const std::vector<Spacing3> spacings = {Spacing3{1, 1, 1},
                                          Spacing3{0.5, 0.5, 1.0},
                                          Spacing3{0.5, 0.25, 1.0}};
  for (int trial = 0; trial < 10; ++trial) {
    const Shape3 shape{5 + trial, 5 + (trial * 3) % 12, 5 + (trial * 7) % 12};
    const MaskGrid m =
        testsupport::random_mask(shape, 0.25 + 0.05 * trial, 6000 + trial);
    for (const Spacing3& sp : spacings) {
      const FloatGrid d = distance_transform(m, sp);
      const auto oracle = testsupport::brute_force_edt(m, sp);
      for (std::size_t i = 0; i < d.size(); ++i)
        if (d[i] != static_cast<float>(oracle[i])) {
          detail = "distance differs from oracle at trial " +
                   std::to_string(trial);
          return false;
        }
    }
  }
  return true;
}

// --- criterion 7: phantom skeleton / decomposition --------------------------

bool phantom_suite_check(std::string& detail) {
  {
    PhantomSpec spec = phantom_preset("cylinder");
    spec.noise_sigma_hu = 0;
    const Phantom ph = rasterize_phantom(spec);
    const MaskGrid skel = skeletonize(ph.mask);
    const CenterlineGraph graph = build_centerline_graph(
        skel, distance_transform(ph.mask, spec.spacing));
    if (graph.endpoint_count() != 2 || graph.junction_count() != 0) {
      detail = "cylinder skeleton: " + std::to_string(graph.endpoint_count()) +
               " endpoints, " + std::to_string(graph.junction_count()) +
               " junctions";
      return false;
    }
    const RegionGrid regions =
        decompose_main_vs_branches(ph.mask, spec.spacing);
    for (std::size_t i = 0; i < ph.mask.size(); ++i)
      if (ph.mask[i] && regions[i] != kRegionMain) {
        detail = "cylinder decompose left non-main voxels";
        return false;
      }
  }

  PhantomSpec spec = phantom_preset("y-bifurcation");
  spec.noise_sigma_hu = 0;
  const Phantom ph = rasterize_phantom(spec);
  const MaskGrid skel = skeletonize(ph.mask);
  const CenterlineGraph graph =
      build_centerline_graph(skel, distance_transform(ph.mask, spec.spacing));
  if (graph.endpoint_count() != 3 || graph.junction_count() != 1) {
    detail = "bifurcation skeleton: " +
             std::to_string(graph.endpoint_count()) + " endpoints, " +
             std::to_string(graph.junction_count()) + " junctions";
    return false;
  }

  std::uint64_t fg = 0, branch = 0;
  for (std::size_t i = 0; i < ph.mask.size(); ++i) {
    fg += ph.mask[i] != 0;
    branch += ph.regions[i] == kRegionBranch;
  }
  const double measured = static_cast<double>(branch) / fg;

  // Capsule volumes: trunk with both end caps; branches buried r_trunk deep
  // in the trunk's end sphere, far hemisphere included.
  const double pi = std::numbers::pi_v<double>;
  const double trunk_r = spec.trunk.radius_mm.front();
  const double v_trunk = PhantomSpec::tube_volume_mm3(spec.trunk) +
                         4.0 / 3.0 * pi * trunk_r * trunk_r * trunk_r;
  double v_branch = 0.0;
  for (const TubeSpec& b : spec.branches) {
    const auto& p0 = b.polyline.front();
    const auto& p1 = b.polyline.back();
    const double len = std::hypot(p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]);
    const double r = b.radius_mm.front();
    v_branch += pi * r * r * (len - trunk_r) + 2.0 / 3.0 * pi * r * r * r;
  }
  const double analytic = v_branch / (v_trunk + v_branch);
  if (std::abs(measured - analytic) > 0.10 * analytic) {
    detail = "branch fraction " + std::to_string(measured) + " vs analytic " +
             std::to_string(analytic);
    return false;
  }
  return true;
}

// --- criterion 8: largest-component trade-off direction ---------------------

bool tradeoff_direction_check(std::string& detail) {
  PhantomSpec spec = phantom_preset("y-bifurcation");
  spec.noise_sigma_hu = 0;
  const Phantom ph = rasterize_phantom(spec);
  const Spacing3 sp = spec.spacing;

  MaskGrid with_blob = ph.mask;
  for (int dz = 0; dz < 3; ++dz)
    for (int dy = 0; dy < 3; ++dy)
      for (int dx = 0; dx < 3; ++dx) with_blob(3 + dx, 3 + dy, 8 + dz) = 1;
  const auto [blob_before, blob_after] =
      cca_tradeoff_report(with_blob, ph.mask, ph.regions, sp);
  if (!(blob_after.main_dice > blob_before.main_dice)) {
    detail = "main dice did not increase after filtering";
    return false;
  }

  MaskGrid cut = ph.mask;
  for (std::size_t i = 0; i < cut.size(); ++i) {
    const Voxel v = cut.unravel(i);
    if (ph.regions[i] == kRegionBranch && v[2] >= 48 && v[2] <= 49) cut[i] = 0;
  }
  const auto [cut_before, cut_after] =
      cca_tradeoff_report(cut, ph.mask, ph.regions, sp);
  if (!(cut_after.branch_dice < cut_before.branch_dice)) {
    detail = "branch dice did not decrease after filtering";
    return false;
  }
  return true;
}

// --- criterion 9: patch round-trip -------------------------------------------

bool patch_roundtrip_check(std::string& detail) {
  std::mt19937_64 rng(909);
  auto draw = [&](int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };

  int trials = 0;
  auto run_config = [&](Shape3 shape, Shape3 patch, Shape3 stride) {
    ++trials;
    const PatchGrid grid = plan_patches(shape, patch, stride);
    const FloatGrid v = testsupport::random_float_grid(shape, 8800 + trials);
    std::vector<FloatGrid> patches;
    patches.reserve(grid.origins.size());
    for (const Voxel& o : grid.origins)
      patches.push_back(extract_patch(v, o, patch));
    return stitch(grid, patches) == v;
  };

  // the published patch sizes, everything scaled down 4x so the suite
  // stays fast: 512x512x228 -> 128x128x57, 96/128/160 -> 24/32/40
  const Shape3 ct{128, 128, 57};
  for (const int p : {24, 32, 40}) {
    const Shape3 patch{p, p, std::min(p, ct.nz)};
    if (!run_config(ct, patch, patch)) {
      detail = "CT-shaped round-trip failed at patch " + std::to_string(p);
      return false;
    }
  }

  while (trials < 100) {
    const Shape3 shape{draw(4, 32), draw(4, 32), draw(4, 32)};
    const Shape3 patch{draw(1, shape.nx), draw(1, shape.ny),
                       draw(1, shape.nz)};
    const Shape3 stride{draw(1, patch.nx), draw(1, patch.ny),
                        draw(1, patch.nz)};
    if (!run_config(shape, patch, stride)) {
      detail = "random config failed at trial " + std::to_string(trials);
      return false;
    }
  }
  return true;
}

// --- criterion 10: end-to-end determinism ------------------------------------

bool end_to_end_check(std::string& detail) {
  const auto dir_a = testsupport::fresh_temp_dir("acceptA");
  const auto dir_b = testsupport::fresh_temp_dir("acceptB");
  const char* scores =
      "unet_1,84.30\nunet_2,85.50\nunet_3,85.52\n"
      "swin_1,86.55\nswin_2,86.75\nswin_3,86.87\n";

  for (const auto& dir : {dir_a, dir_b}) {
    auto r = testsupport::run_cli(
        "phantom --preset y-bifurcation --seed 7 --out-dir " + dir.string() +
        " --mock-preds 6");
    if (r.exit_code != 0) {
      detail = "phantom subcommand failed";
      return false;
    }
    testsupport::spit(dir / "scores.csv", scores);
    std::string preds;
    for (int m = 1; m <= 6; ++m)
      preds += " " + (dir / ("pred_" + std::to_string(m) + ".nii.gz")).string();
    r = testsupport::run_cli(
        "fuse --scores " + (dir / "scores.csv").string() + " --out " +
        (dir / "fused.nii.gz").string() + preds);
    if (r.exit_code != 0) {
      detail = "fuse subcommand failed";
      return false;
    }
    r = testsupport::run_cli(
        "evaluate --gt " + (dir / "gt.nii.gz").string() + " --pred " +
            (dir / "fused.nii.gz").string() + " --regions " +
            (dir / "regions.nii.gz").string(),
        false);
    if (r.exit_code != 0) {
      detail = "evaluate subcommand failed";
      return false;
    }
    testsupport::spit(dir / "eval.csv", r.output);
  }

  for (const char* name :
       {"gt.nii.gz", "regions.nii.gz", "pred_3.nii.gz", "fused.nii.gz",
        "eval.csv"}) {
    if (testsupport::slurp(dir_a / name) != testsupport::slurp(dir_b / name)) {
      detail = std::string(name) + " differs between runs";
      return false;
    }
  }

  // library-vs-CLI equality on the final artifacts
  const PhantomSpec spec = phantom_preset("y-bifurcation", 7);
  const Phantom ph = rasterize_phantom(spec);
  const MaskGrid fused = fuse_and_binarize(
      mock_prediction_suite(ph.mask, 6, 7),
      compute_weights(ModelScores{kValidationDice}));
  if (write_nifti_bytes(Volume(fused, ph.geometry), true) !=
      testsupport::slurp(dir_a / "fused.nii.gz")) {
    detail = "library and CLI fusion artifacts differ";
    return false;
  }
  return true;
}

}  // namespace

int main() {
  const auto suite_start = Clock::now();
  int failures = 0;
  auto criterion = [&](int n, const char* name,
                       const std::function<bool(std::string&)>& fn) {
    std::string detail;
    bool ok = false;
    try {
      ok = fn(detail);
    } catch (const std::exception& e) {
      detail = e.what();
    }
    std::printf("%s  criterion %2d  %s%s%s\n", ok ? "PASS" : "FAIL", n, name,
                detail.empty() ? "" : "  -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  };

  criterion(1, "dice-proportional weight vector vs oracle", weight_vector_check);
  criterion(2, "uniform fusion equals majority vote (all 2^6 patterns)",
            exhaustive_vote_check);
  criterion(3, "ensemble properties, 1000 randomized cases each",
            ensemble_properties_check);
  criterion(4, "NIfTI round-trip, all kinds/wrappers/byte orders",
            nifti_roundtrip_check);
  criterion(5, "connected components vs flood-fill oracle + 256^3 gate",
            cca_oracle_check);
  criterion(6, "distance transform equals the all-pairs oracle",
            edt_oracle_check);
  criterion(7, "phantom skeleton and decomposition suite", phantom_suite_check);
  criterion(8, "largest-component filtering trade-off direction",
            tradeoff_direction_check);
  criterion(9, "patch extract/stitch round-trip, 100 configurations",
            patch_roundtrip_check);
  criterion(10, "end-to-end pipeline determinism, CLI vs library",
            end_to_end_check);

  std::printf("%d of 10 criteria passed in %.1f s\n", 10 - failures,
              seconds_since(suite_start));
  return failures == 0 ? 0 : 1;
}
