#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sheafnn/data.hpp"
#include "sheafnn/errors.hpp"
#include "sheafnn/folds.hpp"
#include "sheafnn/pipeline.hpp"
#include "sheafnn/training.hpp"

using namespace sheafnn;
using namespace sheafnn::pipeline;

namespace {

const data::SpectraDataset& small_dataset() {
  static const auto ds = data::generate_synthetic(60, 0.6, 9);
  return ds;
}

ModelConfig quick(nn::ModelKind kind) {
  ModelConfig c = default_config(kind);
  c.hidden_dim = 8;
  c.stalk_dim = 2;
  c.channels = 4;
  c.epochs = 30;
  c.min_epochs = 10;
  c.patience = 10;
  c.lr = 0.01;
  return c;
}

bool same(const FoldResult& a, const FoldResult& b) {
  return a.failed == b.failed && a.epochs_run == b.epochs_run && a.best_epoch == b.best_epoch &&
         a.valid_accuracy == b.valid_accuracy && a.valid_loss == b.valid_loss && a.test_scores == b.test_scores &&
         a.test_predictions == b.test_predictions;
}

}  // namespace

TEST(Training, ReproducibleForFixedSeed) {
  const auto& ds = small_dataset();
  const auto plan = stratified_kfold(ds.labels, 5, 1)[0];
  const auto fold = prepare_fold(ds, plan, 10);
  for (nn::ModelKind k : {nn::ModelKind::gcn, nn::ModelKind::sage, nn::ModelKind::gat, nn::ModelKind::sheaf_general}) {
    const auto a = train_on_fold(fold, quick(k), 5);
    const auto b = train_on_fold(fold, quick(k), 5);
    ASSERT_FALSE(a.failed) << a.failure;
    EXPECT_TRUE(same(a, b)) << to_string(k);
    const auto c = train_on_fold(fold, quick(k), 6);
    EXPECT_NE(a.test_scores, c.test_scores) << to_string(k);
  }
}

TEST(Training, ReportsPredictionsForTestNodes) {
  const auto& ds = small_dataset();
  const auto plan = stratified_kfold(ds.labels, 5, 2)[1];
  const auto r = run_fold(ds, plan, quick(nn::ModelKind::sage), 3, 10);
  ASSERT_FALSE(r.failed);
  EXPECT_EQ(r.test_nodes, plan.test);
  ASSERT_EQ(r.test_predictions.size(), plan.test.size());
  std::size_t hits = 0;
  for (std::size_t t = 0; t < plan.test.size(); ++t) {
    EXPECT_EQ(r.test_predictions[t], r.test_scores[t] > 0.5 ? 1 : 0);
    hits += r.test_predictions[t] == ds.labels[plan.test[t]];
  }
  EXPECT_DOUBLE_EQ(r.test_accuracy, static_cast<double>(hits) / plan.test.size());
  EXPECT_GE(r.epochs_run, 10u);
  EXPECT_LE(r.epochs_run, 30u);
  EXPECT_GE(r.best_epoch, 1u);
  EXPECT_LE(r.best_epoch, r.epochs_run);
  EXPECT_GT(r.parameter_count, 0u);
}

TEST(Training, LearnsSeparablePreset) {
  const auto ds = data::generate_synthetic(80, 0.6, 4, data::SyntheticPreset::separable);
  const auto plan = stratified_kfold(ds.labels, 5, 4)[0];
  ModelConfig c = quick(nn::ModelKind::sage);
  c.epochs = 80;
  c.min_epochs = 40;
  const auto r = run_fold(ds, plan, c, 1, 10);
  ASSERT_FALSE(r.failed);
  EXPECT_GE(r.train_accuracy, 0.9);
  EXPECT_GE(r.test_accuracy, 0.8);
}

TEST(Training, DivergenceIsRecordedNotThrown) {
  const auto& ds = small_dataset();
  auto fold = prepare_fold(ds, stratified_kfold(ds.labels, 5, 1)[0], 10);
  fold.features(fold.plan.train.front(), 0) = std::numeric_limits<double>::quiet_NaN();
  const auto r = train_on_fold(fold, quick(nn::ModelKind::gcn), 1);
  EXPECT_TRUE(r.failed);
  EXPECT_FALSE(r.failure.empty());
}

TEST(Training, RejectsInvalidConfig) {
  const auto& ds = small_dataset();
  const auto fold = prepare_fold(ds, stratified_kfold(ds.labels, 5, 1)[0], 10);
  ModelConfig c = quick(nn::ModelKind::gcn);
  c.lr = -1.0;
  EXPECT_THROW(train_on_fold(fold, c, 1), ValidationError);
}

TEST(ParallelFor, CoversEveryIndexAndPropagatesErrors) {
  for (std::size_t jobs : {1, 3}) {
    std::vector<std::atomic<int>> hits(50);
    parallel_for(50, jobs, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    EXPECT_THROW(parallel_for(10, jobs, [](std::size_t i) { if (i == 4) throw std::runtime_error("x"); }),
                 std::runtime_error);
  }
  EXPECT_NO_THROW(parallel_for(0, 4, [](std::size_t) { FAIL(); }));
}

TEST(SelectBest, OrderingRules) {
  std::vector<ConfigSummary> s(4);
  for (std::size_t i = 0; i < 4; ++i) s[i].index = i;
  s[0] = {0, 100, 1, 0.99, 0.0};  // failed fold: ranks last
  s[1] = {1, 200, 0, 0.90, 0.0};
  s[2] = {2, 150, 0, 0.90, 0.0};  // same accuracy, fewer parameters
  s[3] = {3, 150, 0, 0.90, 0.0};  // full tie: lower index wins
  EXPECT_EQ(select_best(s), 2u);
  s[1].mean_valid_accuracy = 0.95;
  EXPECT_EQ(select_best(s), 1u);
  EXPECT_THROW(select_best({}), ContractError);
}

TEST(GridSearch, IndependentOfJobCount) {
  const auto& ds = small_dataset();
  GridSpec grid = GridSpec::from_json(nn::ModelKind::gcn, json::parse(R"({"hidden_dim": [4, 8]})"),
                                      json::parse(R"({"epochs": 12, "min_epochs": 4, "patience": 4})"));
  CvOptions o{.k = 5, .repetitions = 2, .seed = 3, .pca_components = 8, .jobs = 1};
  const auto a = grid_search(ds, grid, o);
  o.jobs = 3;
  std::size_t calls = 0;
  const auto b = grid_search(ds, grid, o, [&](std::size_t done, std::size_t total, const FoldResult&) {
    ++calls;
    EXPECT_LE(done, total);
  });
  EXPECT_EQ(calls, 20u);
  ASSERT_EQ(a.results.size(), 20u);
  for (std::size_t i = 0; i < a.results.size(); ++i) {
    EXPECT_TRUE(same(a.results[i], b.results[i])) << i;
    EXPECT_EQ(a.results[i].config, i % 2);
    EXPECT_EQ(a.results[i].repetition, i / 10);
  }
  EXPECT_EQ(a.best_config, b.best_config);
  const auto preds = a.node_predictions();
  ASSERT_EQ(preds.size(), 60u);
  for (const auto& p : preds) EXPECT_EQ(p.size(), 2u);
  EXPECT_EQ(a.best_results().size(), 10u);
}

TEST(GridSearch, SeedsAreStablePerTask) {
  EXPECT_EQ(task_seed(1, 2, 3, 4), task_seed(1, 2, 3, 4));
  EXPECT_NE(task_seed(1, 2, 3, 4), task_seed(1, 2, 3, 5));
  EXPECT_NE(task_seed(1, 2, 3, 4), task_seed(1, 3, 2, 4));
}
