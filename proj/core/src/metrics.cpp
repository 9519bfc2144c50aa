#include "sheafnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sheafnn/errors.hpp"

namespace sheafnn::pipeline {

double accuracy(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size()) throw ShapeError("accuracy: length mismatch");
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += labels[i] == predictions[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double auc(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw ShapeError("auc: length mismatch");
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Average ranks over tie groups, then the Mann-Whitney U statistic.
  double pos_rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t)
      if (labels[order[t]] == 1) {
        pos_rank_sum += rank;
        ++pos;
      }
    i = j;
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) return 0.0;
  const double p = static_cast<double>(pos);
  return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

ClassificationMetrics classification_metrics(std::span<const int> labels, std::span<const int> predictions,
                                             std::span<const double> scores) {
  if (labels.size() != predictions.size() || labels.size() != scores.size())
    throw ShapeError("classification_metrics: length mismatch");
  std::size_t tp = 0, fp = 0, fn = 0, pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (scores[i] < 0.0 || scores[i] > 1.0 || std::isnan(scores[i]))
      throw ContractError("classification_metrics: scores must lie in [0, 1]");
    pos += labels[i] == 1;
    if (predictions[i] == 1 && labels[i] == 1) ++tp;
    if (predictions[i] == 1 && labels[i] == 0) ++fp;
    if (predictions[i] == 0 && labels[i] == 1) ++fn;
  }
  ClassificationMetrics m;
  m.accuracy = accuracy(labels, predictions);
  if (tp + fp > 0) {
    m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    m.precision_defined = true;
  }
  if (tp + fn > 0) {
    m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    m.recall_defined = true;
  }
  if (m.precision_defined && m.recall_defined) {
    m.f1_defined = true;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  }
  if (pos > 0 && pos < labels.size()) {
    m.auc = auc(labels, scores);
    m.auc_defined = true;
  }
  return m;
}

std::pair<double, double> wilson_ci(std::size_t successes, std::size_t n, double z) {
  if (n == 0) throw ContractError("wilson_ci: n must be positive");
  if (successes > n) throw ContractError("wilson_ci: successes exceed n");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

VoteResult majority_vote(const std::vector<std::vector<int>>& predictions, std::size_t repetitions) {
  if (repetitions == 0) throw ContractError("majority_vote: repetitions must be positive");
  VoteResult out;
  out.labels.reserve(predictions.size());
  out.scores.reserve(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& votes = predictions[i];
    if (votes.size() != repetitions)
      throw ContractError("majority_vote: node " + std::to_string(i) + " has " + std::to_string(votes.size()) +
                          " predictions, expected " + std::to_string(repetitions));
    std::size_t ones = 0;
    for (int v : votes) {
      if (v != 0 && v != 1) throw ContractError("majority_vote: predictions must be 0 or 1");
      ones += static_cast<std::size_t>(v);
    }
    out.labels.push_back(2 * ones >= repetitions ? 1 : 0);
    out.scores.push_back(static_cast<double>(ones) / static_cast<double>(repetitions));
  }
  return out;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  if (values.empty()) return r;
  const double n = static_cast<double>(values.size());
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(ss / n);
  return r;
}

}  // namespace sheafnn::pipeline
