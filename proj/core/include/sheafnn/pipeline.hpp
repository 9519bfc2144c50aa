#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sheafnn/config.hpp"
#include "sheafnn/data.hpp"
#include "sheafnn/metrics.hpp"
#include "sheafnn/training.hpp"

namespace sheafnn::pipeline {

/// Runs body(0..count-1) on up to `jobs` threads. The first exception thrown
/// by any call is rethrown after all workers finish.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& body);

struct CvOptions {
  std::size_t k = 10;
  std::size_t repetitions = 5;
  std::uint64_t seed = 0;
  std::size_t pca_components = 50;
  std::size_t jobs = 1;
};

/// Seed of one (repetition, fold, config) training run.
std::uint64_t task_seed(std::uint64_t master, std::size_t repetition, std::size_t fold, std::size_t config);

struct ConfigSummary {
  std::size_t index = 0;
  std::size_t parameter_count = 0;
  std::size_t failed_folds = 0;
  double mean_valid_accuracy = 0.0;  // over successful folds
  double mean_test_accuracy = 0.0;
};

/// Outcome of the repeated cross-validated grid search.
struct CvReport {
  GridSpec grid;
  CvOptions options;
  std::vector<std::string> ids;
  std::vector<int> labels;
  /// Every run, ordered by (repetition, fold, config).
  std::vector<FoldResult> results;
  std::vector<ConfigSummary> configs;
  std::size_t best_config = 0;

  bool empty() const noexcept { return results.empty(); }
  /// Results of the selected configuration, ordered by (repetition, fold).
  std::vector<const FoldResult*> best_results() const;
  /// R test predictions per node for the selected configuration.
  std::vector<std::vector<int>> node_predictions() const;
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total, const FoldResult&)>;

/// Exhaustive repeated stratified k-fold evaluation of every configuration.
/// The best configuration maximizes mean validation accuracy among those
/// without failed folds; ties go to fewer parameters, then to the earlier
/// configuration. Output is identical for any `jobs`.
CvReport grid_search(const data::SpectraDataset& ds, const GridSpec& grid, const CvOptions& options,
                     const ProgressFn& progress = {});

/// Selects the best configuration from per-config summaries.
std::size_t select_best(const std::vector<ConfigSummary>& configs);

}  // namespace sheafnn::pipeline
