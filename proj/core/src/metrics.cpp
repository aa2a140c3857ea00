#include "pulmofuse/metrics.hpp"

#include <cmath>

#include "pulmofuse/errors.hpp"
#include "pulmofuse/morphology.hpp"

namespace pulmofuse {

double dice(const MaskGrid& a, const MaskGrid& b) {
  if (a.shape() != b.shape())
    raise(Errc::shape_mismatch, "dice inputs differ in shape");
  std::uint64_t na = 0, nb = 0, ni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i] != 0;
    nb += b[i] != 0;
    ni += (a[i] != 0) && (b[i] != 0);
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(ni) / static_cast<double>(na + nb);
}

void validate_region_partition(const RegionGrid& regions,
                               const MaskGrid& mask) {
  if (regions.shape() != mask.shape())
    raise(Errc::shape_mismatch, "regions and mask differ in shape");
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) {
      if (regions[i] != kRegionMain && regions[i] != kRegionBranch)
        raise(Errc::region_not_partition,
              "foreground voxel without a main/branch region");
    } else if (regions[i] != kRegionBackground) {
      raise(Errc::region_not_partition,
            "region label on a background voxel");
    }
  }
}

namespace {

MaskGrid select_region(const MaskGrid& mask, const RegionGrid& assignment,
                       std::uint8_t region) {
  MaskGrid out(mask.shape());
  for (std::size_t i = 0; i < mask.size(); ++i)
    out[i] = (mask[i] && assignment[i] == region) ? std::uint8_t{1}
                                                  : std::uint8_t{0};
  return out;
}

}  // namespace

DiceReport multi_level_dice(const MaskGrid& pred, const MaskGrid& gt,
                            const RegionGrid& gt_regions, Spacing3 spacing,
                            double w_branch) {
  if (pred.shape() != gt.shape())
    raise(Errc::shape_mismatch, "pred and gt differ in shape");
  if (!(w_branch > 0.5 && w_branch < 1.0))
    raise(Errc::weight_out_of_range,
          "w_branch must lie in (0.5, 1), got " + std::to_string(w_branch));
  validate_region_partition(gt_regions, gt);

  // Attribute every voxel to the region of its nearest gt foreground voxel;
  // gt voxels are their own nearest site, so they inherit directly.
  RegionGrid assignment(gt.shape(), kRegionBackground);
  bool gt_nonempty = false;
  for (std::size_t i = 0; i < gt.size(); ++i) gt_nonempty |= gt[i] != 0;
  if (gt_nonempty) {
    const Grid3<std::uint32_t> nearest = nearest_site_transform(gt, spacing);
    for (std::size_t i = 0; i < gt.size(); ++i)
      assignment[i] = gt_regions[nearest[i]];
  }

  DiceReport report;
  report.w_branch = w_branch;
  report.w_main = 1.0 - w_branch;
  report.overall_dice = dice(pred, gt);
  report.main_dice = dice(select_region(pred, assignment, kRegionMain),
                          select_region(gt, gt_regions, kRegionMain));
  report.branch_dice = dice(select_region(pred, assignment, kRegionBranch),
                            select_region(gt, gt_regions, kRegionBranch));
  report.multi_level_dice =
      weighted_region_dice(report.main_dice, report.branch_dice, w_branch);
  return report;
}

std::pair<DiceReport, DiceReport> cca_tradeoff_report(
    const MaskGrid& pred, const MaskGrid& gt, const RegionGrid& gt_regions,
    Spacing3 spacing, double w_branch) {
  const DiceReport before =
      multi_level_dice(pred, gt, gt_regions, spacing, w_branch);
  bool pred_nonempty = false;
  for (std::size_t i = 0; i < pred.size(); ++i) pred_nonempty |= pred[i] != 0;
  if (!pred_nonempty) return {before, before};
  const MaskGrid filtered = largest_component(pred);
  const DiceReport after =
      multi_level_dice(filtered, gt, gt_regions, spacing, w_branch);
  return {before, after};
}

DiceReport average_reports(std::span<const DiceReport> reports) {
  if (reports.empty()) raise(Errc::empty_list, "no reports to average");
  const double wb = reports.front().w_branch;
  DiceReport mean;
  mean.w_branch = wb;
  mean.w_main = reports.front().w_main;
  for (const DiceReport& r : reports) {
    if (r.w_branch != wb)
      raise(Errc::weight_out_of_range,
            "reports carry different region weights");
    mean.overall_dice += r.overall_dice;
    mean.main_dice += r.main_dice;
    mean.branch_dice += r.branch_dice;
    mean.multi_level_dice += r.multi_level_dice;
  }
  const double n = static_cast<double>(reports.size());
  mean.overall_dice /= n;
  mean.main_dice /= n;
  mean.branch_dice /= n;
  mean.multi_level_dice /= n;
  return mean;
}

}  // namespace pulmofuse
