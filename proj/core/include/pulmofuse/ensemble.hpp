#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pulmofuse/grid.hpp"

namespace pulmofuse {

// Per-model validation dice scores. Unit-agnostic (percent or fraction);
// the weight normalization cancels any common scale.
struct ModelScores {
  std::vector<double> dice;
  void validate() const;
};

// Non-negative weights summing to 1, one per model.
class EnsembleWeights {
 public:
  explicit EnsembleWeights(std::vector<double> w);
  const std::vector<double>& values() const { return w_; }
  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }

 private:
  std::vector<double> w_;
};

// w_i = d_i / sum(d).
EnsembleWeights compute_weights(const ModelScores& scores);

// Shared inner loop of both the in-memory and the slab-streaming fusion
// paths: out[j] = sum_i weights[i] * rows[i][j], accumulated per voxel in
// double, stored as float-32. Keeping one code path is what makes full and
// streamed runs bit-identical.
void fuse_rows(std::span<const float* const> rows, const EnsembleWeights& weights,
               std::size_t count, float* out);

// Voxelwise weighted sum of probability maps.
FloatGrid fuse(std::span<const FloatGrid> preds, const EnsembleWeights& weights);

// 1 where v >= 0.5, else 0. The exact 0.5 tie goes to foreground.
MaskGrid threshold_half(const FloatGrid& v);

MaskGrid fuse_and_binarize(std::span<const FloatGrid> preds,
                           const EnsembleWeights& weights);

// scores.csv: one "model_id,dice" line per model; order defines model order.
// A leading "model_id,dice" header line is tolerated.
struct ScoreTable {
  std::vector<std::string> model_ids;
  ModelScores scores;
};
ScoreTable parse_scores_csv(std::istream& in);
ScoreTable load_scores_csv(const std::string& path);

}  // namespace pulmofuse
