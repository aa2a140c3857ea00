// pulmofuse command-line pipeline:
//   phantom -> (external inference or mock predictions) -> fuse -> cca ->
//   decompose / evaluate / project.
// Exit codes: 0 success, 1 validation error, 2 I/O or format error.
// Diagnostics go to stderr; data goes to files or stdout.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pulmofuse/ensemble.hpp"
#include "pulmofuse/errors.hpp"
#include "pulmofuse/metrics.hpp"
#include "pulmofuse/morphology.hpp"
#include "pulmofuse/nifti.hpp"
#include "pulmofuse/patching.hpp"
#include "pulmofuse/synth.hpp"
#include "pulmofuse/volume_ops.hpp"

namespace fs = std::filesystem;
using namespace pulmofuse;

namespace {

Volume load_volume(const fs::path& path) {
  NiftiReadResult r = read_nifti_file(path);
  for (const std::string& w : r.warnings)
    std::cerr << path.string() << ": " << w << "\n";
  return std::move(r.volume);
}

MaskGrid load_mask(const fs::path& path) { return to_mask(load_volume(path)); }

std::string case_id_of(const fs::path& path) {
  std::string stem = path.filename().string();
  for (const char* ext : {".gz", ".nii"}) {
    const std::string suffix(ext);
    if (stem.size() > suffix.size() &&
        stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0)
      stem.resize(stem.size() - suffix.size());
  }
  return stem;
}

std::string join_csv(const float* values, int count) {
  std::string out;
  char buf[64];
  for (int i = 0; i < count; ++i) {
    std::snprintf(buf, sizeof buf, "%g", static_cast<double>(values[i]));
    if (i) out += ",";
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// info
// ---------------------------------------------------------------------------

struct InfoArgs {
  std::string file;
  bool check_mask = false;
};

int run_info(const InfoArgs& args) {
  NiftiStreamReader reader(std::make_unique<FileSource>(args.file));
  const NiftiHeader& h = reader.header();

  std::string dim;
  for (int i = 0; i < 8; ++i)
    dim += (i ? "," : "") + std::to_string(h.dim[i]);

  std::cout << "file=" << args.file << "\n";
  std::cout << "sizeof_hdr=" << h.sizeof_hdr << "\n";
  std::cout << "dim=" << dim << "\n";
  std::cout << "datatype_code=" << h.datatype_code << "\n";
  std::cout << "bitpix=" << h.bitpix << "\n";
  std::cout << "pixdim=" << join_csv(h.pixdim.data(), 8) << "\n";
  std::cout << "vox_offset=" << h.vox_offset << "\n";
  std::cout << "scl_slope=" << h.scl_slope << "\n";
  std::cout << "scl_inter=" << h.scl_inter << "\n";
  std::cout << "qform_code=" << h.qform_code << "\n";
  std::cout << "sform_code=" << h.sform_code << "\n";
  std::cout << "srow_x=" << join_csv(h.srow_x.data(), 4) << "\n";
  std::cout << "srow_y=" << join_csv(h.srow_y.data(), 4) << "\n";
  std::cout << "srow_z=" << join_csv(h.srow_z.data(), 4) << "\n";
  std::cout << "magic=" << std::string(h.magic.data(), 3) << "\n";
  std::cout << "element_kind=" << element_kind_name(reader.decoded_kind())
            << "\n";
  for (const std::string& w : reader.warnings())
    std::cerr << args.file << ": " << w << "\n";

  if (args.check_mask) {
    const Volume v = reader.read_all();
    const bool ok = mask_labels_valid(v);
    std::cout << "mask_labels_ok=" << (ok ? 1 : 0) << "\n";
    if (!ok)
      raise(Errc::invalid_spec,
            args.file + ": volume contains labels other than {0, 1}");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// preprocess
// ---------------------------------------------------------------------------

struct PreprocessArgs {
  std::string input;
  std::string output;
  std::string clip = "-1000:1000";
  bool crop = false;
  std::string crop_record;
};

ClipRange parse_clip(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    raise(Errc::degenerate_range, "--clip expects lo:hi, got '" + text + "'");
  try {
    ClipRange range;
    range.lo = std::stod(text.substr(0, colon));
    range.hi = std::stod(text.substr(colon + 1));
    return range;
  } catch (const std::exception&) {
    raise(Errc::degenerate_range, "--clip expects lo:hi, got '" + text + "'");
  }
}

int run_preprocess(const PreprocessArgs& args) {
  const ClipRange range = parse_clip(args.clip);
  Volume v = load_volume(args.input);
  Volume normalized = clip_scale_hu(v, range);

  CropRecord record{};
  if (args.crop) {
    CropResult r = crop_uninformative_slices(normalized);
    normalized = std::move(r.volume);
    record = r.record;
  } else {
    const Shape3 s = normalized.shape();
    record = CropRecord{s, 0, s.nx, 0, s.ny, 0, s.nz};
  }

  write_nifti_file(args.output, normalized, gzip_path(args.output));
  if (!args.crop_record.empty()) {
    AtomicFileSink sink(args.crop_record);
    std::string text;
    text += "original=" + std::to_string(record.original.nx) + "," +
            std::to_string(record.original.ny) + "," +
            std::to_string(record.original.nz) + "\n";
    text += "kept_x=" + std::to_string(record.x0) + "," +
            std::to_string(record.x1) + "\n";
    text += "kept_y=" + std::to_string(record.y0) + "," +
            std::to_string(record.y1) + "\n";
    text += "kept_z=" + std::to_string(record.z0) + "," +
            std::to_string(record.z1) + "\n";
    sink.write(text.data(), text.size());
    sink.finish();
  }
  return 0;
}

// ---------------------------------------------------------------------------
// plan-patches
// ---------------------------------------------------------------------------

struct PlanArgs {
  std::string shape;
  std::string patch;
  std::string stride;
};

Shape3 parse_shape(const std::string& text, const char* what) {
  Shape3 s;
  int* fields[3] = {&s.nx, &s.ny, &s.nz};
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    try {
      std::size_t used = 0;
      *fields[i] = std::stoi(text.substr(pos), &used);
      pos += used;
    } catch (const std::exception&) {
      raise(Errc::shape_mismatch,
            std::string(what) + " expects X,Y,Z or a single cube extent");
    }
    if (i < 2) {
      if (pos >= text.size()) {  // single extent -> cube
        *fields[1] = *fields[2] = s.nx;
        return s;
      }
      if (text[pos] != ',')
        raise(Errc::shape_mismatch, std::string(what) + ": expected ','");
      ++pos;
    }
  }
  return s;
}

int run_plan(const PlanArgs& args) {
  const Shape3 volume = parse_shape(args.shape, "--shape");
  const Shape3 patch = parse_shape(args.patch, "--patch");
  const Shape3 stride =
      args.stride.empty() ? patch : parse_shape(args.stride, "--stride");
  const PatchGrid grid = plan_patches(volume, patch, stride);
  std::cout << "x,y,z\n";
  for (const Voxel& o : grid.origins)
    std::cout << o[0] << "," << o[1] << "," << o[2] << "\n";
  std::cerr << grid.origins.size() << " patches\n";
  return 0;
}

// ---------------------------------------------------------------------------
// fuse (slab-streamed when tall)
// ---------------------------------------------------------------------------

struct FuseArgs {
  std::string scores;
  std::string out;
  std::string soft_out;
  std::vector<std::string> preds;
};

constexpr int kSlabStreamThreshold = 256;  // z-slices

int run_fuse(const FuseArgs& args) {
  const ScoreTable table = load_scores_csv(args.scores);
  if (table.scores.dice.size() != args.preds.size())
    raise(Errc::count_mismatch,
          "scores file lists " + std::to_string(table.scores.dice.size()) +
              " models but " + std::to_string(args.preds.size()) +
              " prediction files were given");
  const EnsembleWeights weights = compute_weights(table.scores);
  {
    std::string line = "weights=";
    for (std::size_t i = 0; i < weights.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6f", weights[i]);
      line += (i ? "," : "") + std::string(buf);
    }
    std::cerr << line << "\n";
  }

  std::vector<NiftiStreamReader> readers;
  readers.reserve(args.preds.size());
  for (const std::string& p : args.preds)
    readers.emplace_back(std::make_unique<FileSource>(p));

  const Shape3 shape = readers.front().shape();
  const Geometry geom = readers.front().geometry();
  for (std::size_t i = 1; i < readers.size(); ++i)
    if (readers[i].shape() != shape)
      raise(Errc::shape_mismatch,
            args.preds[i] + " has a different shape than " + args.preds[0]);

  const int slab =
      shape.nz > kSlabStreamThreshold ? 64 : std::max(shape.nz, 1);
  const std::size_t per_slice =
      static_cast<std::size_t>(shape.nx) * static_cast<std::size_t>(shape.ny);

  auto mask_writer = std::make_unique<NiftiStreamWriter>(
      [&]() -> std::unique_ptr<ByteSink> {
        auto file = std::make_unique<AtomicFileSink>(args.out);
        if (gzip_path(args.out))
          return std::make_unique<GzipSink>(std::move(file));
        return file;
      }(),
      make_header(shape, geom, ElementKind::u8));
  std::unique_ptr<NiftiStreamWriter> soft_writer;
  if (!args.soft_out.empty()) {
    auto file = std::make_unique<AtomicFileSink>(args.soft_out);
    std::unique_ptr<ByteSink> sink = std::move(file);
    if (gzip_path(args.soft_out))
      sink = std::make_unique<GzipSink>(std::move(sink));
    soft_writer = std::make_unique<NiftiStreamWriter>(
        std::move(sink), make_header(shape, geom, ElementKind::f32));
  }

  std::vector<FloatGrid> slabs(readers.size());
  std::vector<const float*> rows(readers.size());
  FloatGrid fused_slab;
  std::vector<std::uint8_t> mask_slab;

  for (int z0 = 0; z0 < shape.nz; z0 += slab) {
    const int nz = std::min(slab, shape.nz - z0);
    const std::size_t count = per_slice * static_cast<std::size_t>(nz);
    for (std::size_t m = 0; m < readers.size(); ++m) {
      slabs[m] = FloatGrid(Shape3{shape.nx, shape.ny, nz});
      readers[m].read_f32(slabs[m].data(), count);
      for (std::size_t i = 0; i < count; ++i) {
        const float v = slabs[m][i];
        if (std::isnan(v))
          raise(Errc::non_finite_value,
                args.preds[m] + ": non-finite probability value");
        if (v < 0.0f || v > 1.0f)
          raise(Errc::spec_out_of_range,
                args.preds[m] + ": probability outside [0, 1]");
      }
      rows[m] = slabs[m].data();
    }
    fused_slab = FloatGrid(Shape3{shape.nx, shape.ny, nz});
    fuse_rows(rows, weights, count, fused_slab.data());
    mask_slab.resize(count);
    for (std::size_t i = 0; i < count; ++i)
      mask_slab[i] = fused_slab[i] >= 0.5f ? 1 : 0;
    mask_writer->write_u8(mask_slab.data(), count);
    if (soft_writer) soft_writer->write_f32(fused_slab.data(), count);
  }
  mask_writer->finish();
  if (soft_writer) soft_writer->finish();
  return 0;
}

// ---------------------------------------------------------------------------
// cca
// ---------------------------------------------------------------------------

struct CcaArgs {
  std::string input;
  std::string output;
  bool keep_largest = false;
  int connectivity = 26;
};

Connectivity parse_connectivity(int value) {
  switch (value) {
    case 6: return Connectivity::six;
    case 18: return Connectivity::eighteen;
    case 26: return Connectivity::twenty_six;
  }
  raise(Errc::spec_out_of_range, "--connectivity must be 6, 18 or 26");
}

int run_cca(const CcaArgs& args) {
  const Connectivity conn = parse_connectivity(args.connectivity);
  const Volume in = load_volume(args.input);
  const MaskGrid mask = to_mask(in);

  if (args.keep_largest) {
    const MaskGrid kept = largest_component(mask, conn);
    write_nifti_file(args.output, Volume(kept, in.geometry()),
                     gzip_path(args.output));
    return 0;
  }

  const LabelMap lm = connected_components(mask, conn);
  std::cerr << "components=" << lm.component_count() << "\n";
  if (lm.component_count() > 255)
    raise(Errc::spec_out_of_range,
          "more than 255 components; rerun with --keep-largest");
  Grid3<std::uint8_t> labels(mask.shape());
  for (std::size_t i = 0; i < labels.size(); ++i)
    labels[i] = static_cast<std::uint8_t>(lm.labels[i]);
  write_nifti_file(args.output, Volume(std::move(labels), in.geometry()),
                   gzip_path(args.output));
  return 0;
}

// ---------------------------------------------------------------------------
// decompose
// ---------------------------------------------------------------------------

struct DecomposeArgs {
  std::string input;
  std::string output;
  double alpha = 0.5;
  int connectivity = 26;
};

int run_decompose(const DecomposeArgs& args) {
  const Volume in = load_volume(args.input);
  const MaskGrid mask = to_mask(in);
  DecomposeParams params;
  params.alpha = args.alpha;
  params.connectivity = parse_connectivity(args.connectivity);
  const RegionGrid regions =
      decompose_main_vs_branches(mask, in.spacing(), params);
  write_nifti_file(args.output, Volume(regions, in.geometry()),
                   gzip_path(args.output));
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::vector<std::string> gt;
  std::vector<std::string> pred;
  std::vector<std::string> regions;
  double w_branch = 0.6;
  double alpha = 0.5;
  bool cca_report = false;
};

std::string report_row(const std::string& id, const DiceReport& r) {
  char buf[192];
  std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%.6f", id.c_str(),
                r.overall_dice, r.main_dice, r.branch_dice,
                r.multi_level_dice);
  return buf;
}

int run_evaluate(const EvaluateArgs& args) {
  if (args.gt.size() != args.pred.size())
    raise(Errc::count_mismatch,
          std::to_string(args.gt.size()) + " --gt files vs " +
              std::to_string(args.pred.size()) + " --pred files");
  if (!args.regions.empty() && args.regions.size() != args.gt.size())
    raise(Errc::count_mismatch,
          "--regions must be given once per case or not at all");
  if (args.gt.empty())
    raise(Errc::empty_list, "no --gt/--pred pairs to evaluate");

  std::cout << "case_id,overall,main,branch,multilevel\n";
  std::vector<DiceReport> reports;
  for (std::size_t i = 0; i < args.gt.size(); ++i) {
    const Volume gt_vol = load_volume(args.gt[i]);
    const MaskGrid gt = to_mask(gt_vol);
    const MaskGrid pred = load_mask(args.pred[i]);
    RegionGrid regions;
    if (!args.regions.empty()) {
      regions = load_volume(args.regions[i]).visit([](const auto& g) {
        RegionGrid out(g.shape());
        for (std::size_t k = 0; k < g.size(); ++k)
          out[k] = static_cast<std::uint8_t>(g[k]);
        return out;
      });
    } else {
      DecomposeParams params;
      params.alpha = args.alpha;
      regions = decompose_main_vs_branches(gt, gt_vol.spacing(), params);
      std::cerr << args.gt[i] << ": regions derived (alpha=" << args.alpha
                << ")\n";
    }

    const std::string id = case_id_of(args.pred[i]);
    if (args.cca_report) {
      const auto [before, after] = cca_tradeoff_report(
          pred, gt, regions, gt_vol.spacing(), args.w_branch);
      std::cout << report_row(id, before) << "\n";
      std::cout << report_row(id + ":cca", after) << "\n";
      reports.push_back(before);
    } else {
      const DiceReport r = multi_level_dice(pred, gt, regions,
                                            gt_vol.spacing(), args.w_branch);
      std::cout << report_row(id, r) << "\n";
      reports.push_back(r);
    }
  }
  std::cout << report_row("mean", average_reports(reports)) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// project
// ---------------------------------------------------------------------------

struct ProjectArgs {
  std::string input;
  std::string output;
  std::string plane = "axial";
};

int run_project(const ProjectArgs& args) {
  Plane plane;
  if (args.plane == "axial") plane = Plane::axial;
  else if (args.plane == "coronal") plane = Plane::coronal;
  else if (args.plane == "sagittal") plane = Plane::sagittal;
  else
    raise(Errc::spec_out_of_range,
          "--plane must be axial, coronal or sagittal");

  const Volume v = load_volume(args.input);
  const Image2 img = project_sum(v, plane);
  AtomicFileSink sink(args.output);
  write_pgm(sink, img);
  sink.finish();
  return 0;
}

// ---------------------------------------------------------------------------
// phantom
// ---------------------------------------------------------------------------

struct PhantomArgs {
  std::string preset = "y-bifurcation";
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool no_noise = false;
  int mock_preds = 0;
};

int run_phantom(const PhantomArgs& args) {
  PhantomSpec spec = phantom_preset(args.preset, args.seed);
  if (args.no_noise) spec.noise_sigma_hu = 0.0;
  const Phantom ph = rasterize_phantom(spec);

  fs::create_directories(args.out_dir);
  const fs::path dir(args.out_dir);
  write_nifti_file(dir / "hu.nii.gz", ph.hu, true);
  write_nifti_file(dir / "gt.nii.gz", Volume(ph.mask, ph.geometry), true);
  write_nifti_file(dir / "regions.nii.gz", Volume(ph.regions, ph.geometry),
                   true);

  if (args.mock_preds > 0) {
    const std::vector<FloatGrid> preds =
        mock_prediction_suite(ph.mask, args.mock_preds, args.seed);
    for (int m = 0; m < args.mock_preds; ++m) {
      const fs::path name = dir / ("pred_" + std::to_string(m + 1) + ".nii.gz");
      write_nifti_file(name, Volume(preds[m], ph.geometry), true);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"non-neural pulmonary-artery segmentation pipeline"};
  app.require_subcommand(1);
  app.set_config("--config");
  app.failure_message(CLI::FailureMessage::help);

  InfoArgs info_args;
  auto* info = app.add_subcommand("info", "print NIfTI header fields");
  info->add_option("file", info_args.file, "NIfTI file")->required();
  info->add_flag("--check-mask", info_args.check_mask,
                 "require voxel labels in {0, 1}");

  PreprocessArgs pre_args;
  auto* pre = app.add_subcommand("preprocess", "clip/scale HU, drop empty slices");
  pre->add_option("input", pre_args.input)->required();
  pre->add_option("output", pre_args.output)->required();
  pre->add_option("--clip", pre_args.clip, "HU window, lo:hi");
  pre->add_flag("--crop", pre_args.crop, "remove uninformative z-slices");
  pre->add_option("--crop-record", pre_args.crop_record,
                  "write the kept ranges to this file");

  PlanArgs plan_args;
  auto* plan = app.add_subcommand("plan-patches", "emit sliding-window origins as CSV");
  plan->add_option("--shape", plan_args.shape, "volume shape X,Y,Z")->required();
  plan->add_option("--patch", plan_args.patch, "patch shape (cube or X,Y,Z)")->required();
  plan->add_option("--stride", plan_args.stride, "stride (default: patch)");

  FuseArgs fuse_args;
  auto* fusec = app.add_subcommand("fuse", "dice-weighted fusion of prediction maps");
  fusec->add_option("--scores", fuse_args.scores, "CSV of model_id,dice")->required();
  fusec->add_option("--out", fuse_args.out, "binarized output volume")->required();
  fusec->add_option("--soft-out", fuse_args.soft_out, "also write the soft fusion");
  fusec->add_option("preds", fuse_args.preds, "per-model probability volumes")
      ->required();

  CcaArgs cca_args;
  auto* cca = app.add_subcommand("cca", "connected components / largest component");
  cca->add_option("input", cca_args.input)->required();
  cca->add_option("output", cca_args.output)->required();
  cca->add_flag("--keep-largest", cca_args.keep_largest,
                "write only the largest component as a binary mask");
  cca->add_option("--connectivity", cca_args.connectivity, "6, 18 or 26");

  DecomposeArgs dec_args;
  auto* dec = app.add_subcommand("decompose", "split a mask into main artery vs branches");
  dec->add_option("input", dec_args.input)->required();
  dec->add_option("output", dec_args.output)->required();
  dec->add_option("--alpha", dec_args.alpha, "main-edge radius fraction");
  dec->add_option("--connectivity", dec_args.connectivity, "6, 18 or 26");

  EvaluateArgs eval_args;
  auto* eval = app.add_subcommand("evaluate", "dice / multi-level dice CSV");
  eval->add_option("--gt", eval_args.gt, "ground-truth mask(s)")->required();
  eval->add_option("--pred", eval_args.pred, "prediction mask(s)")->required();
  eval->add_option("--regions", eval_args.regions,
                   "main/branch region labels (derived from gt when absent)");
  eval->add_option("--w-branch", eval_args.w_branch, "branch weight in (0.5, 1)");
  eval->add_option("--alpha", eval_args.alpha, "alpha for derived regions");
  eval->add_flag("--cca-report", eval_args.cca_report,
                 "also score after largest-component filtering");

  ProjectArgs proj_args;
  auto* proj = app.add_subcommand("project", "sum-projection to a PGM image");
  proj->add_option("input", proj_args.input)->required();
  proj->add_option("output", proj_args.output)->required();
  proj->add_option("--plane", proj_args.plane, "axial | coronal | sagittal");

  PhantomArgs ph_args;
  auto* ph = app.add_subcommand("phantom", "write a synthetic vascular test case");
  ph->add_option("--preset", ph_args.preset, "cylinder | y-bifurcation");
  ph->add_option("--out-dir", ph_args.out_dir, "output directory")->required();
  ph->add_option("--seed", ph_args.seed, "noise / mock seed");
  ph->add_flag("--no-noise", ph_args.no_noise, "disable HU noise");
  ph->add_option("--mock-preds", ph_args.mock_preds,
                 "also write this many mock model predictions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (info->parsed()) return run_info(info_args);
    if (pre->parsed()) return run_preprocess(pre_args);
    if (plan->parsed()) return run_plan(plan_args);
    if (fusec->parsed()) return run_fuse(fuse_args);
    if (cca->parsed()) return run_cca(cca_args);
    if (dec->parsed()) return run_decompose(dec_args);
    if (eval->parsed()) return run_evaluate(eval_args);
    if (proj->parsed()) return run_project(proj_args);
    if (ph->parsed()) return run_phantom(ph_args);
  } catch (const Error& e) {
    std::cerr << "error (" << errc_name(e.code()) << "): " << e.what() << "\n";
    return is_format_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
