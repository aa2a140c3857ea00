#pragma once

#include <span>
#include <utility>

#include "pulmofuse/grid.hpp"

namespace pulmofuse {

// 2|A n B| / (|A| + |B|); 1.0 when both masks are empty.
double dice(const MaskGrid& a, const MaskGrid& b);

struct DiceReport {
  double overall_dice = 0.0;
  double main_dice = 0.0;
  double branch_dice = 0.0;
  double multi_level_dice = 0.0;
  double w_branch = 0.0;
  double w_main = 0.0;
};

// Weighted combination without the (0.5, 1) range gate, for callers that
// deliberately weight both regions equally.
inline double weighted_region_dice(double main_dice, double branch_dice,
                                   double w_branch) {
  return w_branch * branch_dice + (1.0 - w_branch) * main_dice;
}

// Region-aware dice: prediction voxels are attributed to main or branch by
// the nearest ground-truth region voxel (voxels inside the ground truth
// inherit their own region), then the two region dices are combined with
// the branch-heavy weight. gt_regions must partition gt exactly; w_branch
// must lie in (0.5, 1).
DiceReport multi_level_dice(const MaskGrid& pred, const MaskGrid& gt,
                            const RegionGrid& gt_regions, Spacing3 spacing,
                            double w_branch = 0.6);

// The report before and after largest-component filtering of the
// prediction, so the post-processing trade-off is observable.
std::pair<DiceReport, DiceReport> cca_tradeoff_report(
    const MaskGrid& pred, const MaskGrid& gt, const RegionGrid& gt_regions,
    Spacing3 spacing, double w_branch = 0.6);

// Fieldwise arithmetic mean; all reports must carry the same weights.
DiceReport average_reports(std::span<const DiceReport> reports);

// Raises Errc::region_not_partition unless regions == {1,2} exactly on the
// mask foreground and 0 elsewhere.
void validate_region_partition(const RegionGrid& regions, const MaskGrid& mask);

}  // namespace pulmofuse
