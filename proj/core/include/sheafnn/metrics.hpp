#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace sheafnn::pipeline {

/// Binary classification metrics on the positive class. Quantities whose
/// denominator is zero are reported as 0 with their `*_defined` flag false.
struct ClassificationMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
  bool precision_defined = false;
  bool recall_defined = false;
  bool f1_defined = false;
  bool auc_defined = false;
};

/// `scores` rank samples for the AUC (Mann-Whitney statistic, ties count
/// one half).
ClassificationMetrics classification_metrics(std::span<const int> labels, std::span<const int> predictions,
                                             std::span<const double> scores);

double accuracy(std::span<const int> labels, std::span<const int> predictions);
double auc(std::span<const int> labels, std::span<const double> scores);

/// Wilson score interval for a binomial proportion.
std::pair<double, double> wilson_ci(std::size_t successes, std::size_t n, double z = 1.96);

struct VoteResult {
  std::vector<int> labels;
  std::vector<double> scores;  // fraction of positive votes
};

/// Majority vote over each node's predictions, ties going to 1. Every node
/// must carry exactly `repetitions` predictions.
VoteResult majority_vote(const std::vector<std::vector<int>>& predictions, std::size_t repetitions);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};
MeanStd mean_std(std::span<const double> values);

}  // namespace sheafnn::pipeline
