#include "pulmofuse/ensemble.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "pulmofuse/errors.hpp"

namespace pulmofuse {

void ModelScores::validate() const {
  if (dice.empty()) raise(Errc::empty_scores, "no model scores given");
  for (std::size_t i = 0; i < dice.size(); ++i)
    if (!(dice[i] > 0.0) || !std::isfinite(dice[i]))
      raise(Errc::non_positive_score,
            "dice score " + std::to_string(i) + " must be finite and > 0");
}

EnsembleWeights::EnsembleWeights(std::vector<double> w) : w_(std::move(w)) {
  if (w_.empty()) raise(Errc::empty_scores, "no weights given");
  double sum = 0.0;
  for (double x : w_) {
    if (!(x >= 0.0) || !std::isfinite(x))
      raise(Errc::non_positive_score, "weights must be finite and >= 0");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    raise(Errc::non_positive_score, "weights must sum to 1 (got " +
                                        std::to_string(sum) + ")");
}

EnsembleWeights compute_weights(const ModelScores& scores) {
  scores.validate();
  double total = 0.0;
  for (double d : scores.dice) total += d;
  std::vector<double> w(scores.dice.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = scores.dice[i] / total;
  return EnsembleWeights(std::move(w));
}

void fuse_rows(std::span<const float* const> rows,
               const EnsembleWeights& weights, std::size_t count, float* out) {
  if (rows.size() != weights.size())
    raise(Errc::count_mismatch,
          std::to_string(rows.size()) + " maps vs " +
              std::to_string(weights.size()) + " weights");
  const std::size_t m = rows.size();
  for (std::size_t j = 0; j < count; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      acc += weights[i] * static_cast<double>(rows[i][j]);
    out[j] = static_cast<float>(acc);
  }
}

FloatGrid fuse(std::span<const FloatGrid> preds,
               const EnsembleWeights& weights) {
  if (preds.size() != weights.size())
    raise(Errc::count_mismatch, std::to_string(preds.size()) + " maps vs " +
                                    std::to_string(weights.size()) +
                                    " weights");
  if (preds.empty()) raise(Errc::empty_scores, "no prediction maps");
  const Shape3 shape = preds[0].shape();
  std::vector<const float*> rows(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].shape() != shape)
      raise(Errc::shape_mismatch, "prediction maps differ in shape");
    rows[i] = preds[i].data();
  }
  FloatGrid out(shape);
  fuse_rows(rows, weights, shape.count(), out.data());
  return out;
}

MaskGrid threshold_half(const FloatGrid& v) {
  MaskGrid out(v.shape());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]))
      raise(Errc::non_finite_value, "non-finite probability value");
    out[i] = v[i] >= 0.5f ? std::uint8_t{1} : std::uint8_t{0};
  }
  return out;
}

MaskGrid fuse_and_binarize(std::span<const FloatGrid> preds,
                           const EnsembleWeights& weights) {
  return threshold_half(fuse(preds, weights));
}

ScoreTable parse_scores_csv(std::istream& in) {
  ScoreTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      raise(Errc::io_failure,
            "scores line " + std::to_string(lineno) + ": expected id,dice");
    const std::string id = line.substr(0, comma);
    const std::string val = line.substr(comma + 1);
    if (lineno == 1 && id == "model_id") continue;  // header row
    try {
      std::size_t used = 0;
      const double d = std::stod(val, &used);
      if (used != val.size()) throw std::invalid_argument(val);
      table.model_ids.push_back(id);
      table.scores.dice.push_back(d);
    } catch (const std::exception&) {
      raise(Errc::io_failure, "scores line " + std::to_string(lineno) +
                                  ": bad dice value '" + val + "'");
    }
  }
  table.scores.validate();
  return table;
}

ScoreTable load_scores_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_failure, "cannot open scores file: " + path);
  return parse_scores_csv(in);
}

}  // namespace pulmofuse
