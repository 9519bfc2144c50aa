#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sheafnn/config.hpp"
#include "sheafnn/data.hpp"
#include "sheafnn/folds.hpp"
#include "sheafnn/graph.hpp"
#include "sheafnn/layers.hpp"

namespace sheafnn::pipeline {

/// Per-fold inputs shared by every configuration: the scaler+PCA fitted on
/// the training indices only, the reduced features of all samples and the
/// similarity graph built over all of them.
struct PreparedFold {
  FoldPlan plan;
  data::PcaModel pca;
  Matrix features;
  std::vector<int> labels;
  std::shared_ptr<const nn::GraphContext> context;

  const Graph& graph() const { return context->graph; }
};

/// `pca_components` is capped at min(|train| − 1, n_points).
PreparedFold prepare_fold(const data::SpectraDataset& ds, const FoldPlan& plan, std::size_t pca_components);

struct FoldResult {
  std::size_t repetition = 0;
  std::size_t fold = 0;
  std::size_t config = 0;
  bool failed = false;
  std::string failure;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  std::size_t parameter_count = 0;
  double train_accuracy = 0.0;
  double valid_accuracy = 0.0;
  double valid_loss = 0.0;
  double test_accuracy = 0.0;
  std::vector<std::size_t> test_nodes;
  std::vector<int> test_predictions;
  std::vector<double> test_scores;  // predicted probability of label 1
};

/// Full-batch transductive training: all features and edges are visible,
/// the loss only sees training labels. The checkpoint with the highest
/// validation accuracy (ties: lower validation loss) produces the
/// reported predictions. Divergence marks the result failed rather than
/// throwing.
FoldResult train_on_fold(const PreparedFold& fold, const ModelConfig& config, std::uint64_t seed);

FoldResult run_fold(const data::SpectraDataset& ds, const FoldPlan& plan, const ModelConfig& config,
                    std::uint64_t seed, std::size_t pca_components = 50);

}  // namespace sheafnn::pipeline
