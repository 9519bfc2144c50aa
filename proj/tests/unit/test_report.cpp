#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "sheafnn/errors.hpp"
#include "sheafnn/io.hpp"
#include "sheafnn/report.hpp"

using namespace sheafnn;
using namespace sheafnn::pipeline;

namespace {

/// Four nodes, two folds, two repetitions, one configuration. Node 3 is
/// misclassified in repetition 1 only; node 1 in both.
CvReport fake_report() {
  CvReport r;
  r.grid.kind = nn::ModelKind::gcn;
  r.grid.base = default_config(nn::ModelKind::gcn);
  r.options = {.k = 2, .repetitions = 2, .seed = 7, .pca_components = 3, .jobs = 1};
  r.ids = {"a", "b", "c", "d"};
  r.labels = {1, 1, 0, 0};
  const std::vector<std::vector<std::size_t>> tests = {{0, 2}, {1, 3}};
  const int pred[2][4] = {{1, 0, 0, 0}, {1, 0, 0, 1}};
  for (std::size_t rep = 0; rep < 2; ++rep)
    for (std::size_t f = 0; f < 2; ++f) {
      FoldResult fr;
      fr.repetition = rep;
      fr.fold = f;
      fr.epochs_run = 10;
      fr.best_epoch = 4;
      fr.parameter_count = 99;
      fr.train_accuracy = 1.0;
      fr.valid_accuracy = 0.75;
      fr.valid_loss = 0.5;
      fr.test_nodes = tests[f];
      std::size_t hits = 0;
      for (std::size_t n : tests[f]) {
        fr.test_predictions.push_back(pred[rep][n]);
        fr.test_scores.push_back(pred[rep][n] ? 0.9 : 0.1);
        hits += pred[rep][n] == r.labels[n];
      }
      fr.test_accuracy = hits / 2.0;
      r.results.push_back(fr);
    }
  r.configs = {{0, 99, 0, 0.75, 0.0}};
  r.best_config = 0;
  return r;
}

}  // namespace

TEST(Report, SummaryFields) {
  const auto j = summary_json(fake_report());
  EXPECT_EQ(j["model"], "gcn");
  EXPECT_EQ(j["grid_size"], 1);
  EXPECT_EQ(j["n_samples"], 4);
  EXPECT_EQ(j["failed_runs"], 0);
  EXPECT_EQ(j["best_config_index"], 0);
  // Fold accuracies: rep0 {1.0, 0.5}, rep1 {1.0, 0.0}.
  EXPECT_DOUBLE_EQ(j["fold_accuracy"]["mean"].get<double>(), 0.625);
  EXPECT_DOUBLE_EQ(j["fold_accuracy"]["std_over_folds"].get<double>(), std::sqrt(0.171875));
  EXPECT_DOUBLE_EQ(j["fold_accuracy"]["std_over_repetition_means"].get<double>(), 0.125);
  // Votes: a=1 ✓, b=0 ✗, c=0 ✓, d tie → 1 ✗.
  EXPECT_EQ(j["vote"]["correct"], 2);
  EXPECT_DOUBLE_EQ(j["vote"]["accuracy"].get<double>(), 0.5);
  const auto ci = wilson_ci(2, 4);
  EXPECT_DOUBLE_EQ(j["vote"]["ci95"][0].get<double>(), ci.first);
}

TEST(Report, CsvLayout) {
  const CvReport r = fake_report();
  const std::string folds = folds_csv(r);
  EXPECT_EQ(folds.substr(0, folds.find('\n')),
            "repetition,fold,config,status,epochs,best_epoch,parameters,train_accuracy,valid_accuracy,valid_loss,"
            "test_accuracy");
  EXPECT_NE(folds.find("\n1,1,0,ok,10,4,99,1,0.75,0.5,0\n"), std::string::npos);
  EXPECT_EQ(votes_csv(r), "id,label,pred_r0,pred_r1,vote,score\na,1,1,1,1,1\nb,1,0,0,0,0\nc,0,0,0,0,0\nd,0,0,1,1,0.5\n");
}

TEST(Report, VotesRoundTripReproducesSummaryBlock) {
  const CvReport r = fake_report();
  const VotesTable t = parse_votes_csv(votes_csv(r));
  EXPECT_EQ(t.repetitions, 2u);
  EXPECT_EQ(t.ids.size(), 4u);
  EXPECT_EQ(recompute_vote_summary(t), summary_json(r)["vote"]);
}

TEST(Report, VotesValidation) {
  EXPECT_THROW(parse_votes_csv(""), ParseError);
  EXPECT_THROW(parse_votes_csv("id,label,vote,score\n"), ParseError);
  EXPECT_THROW(parse_votes_csv("id,label,pred_r0,vote,score\na,1,2,1,1\n"), ParseError);
  EXPECT_THROW(parse_votes_csv("id,label,pred_r0,vote,score\na,1,1\n"), ParseError);
  const VotesTable tampered = parse_votes_csv("id,label,pred_r0,vote,score\na,1,1,0,1\n");
  EXPECT_THROW(recompute_vote_summary(tampered), ValidationError);
}

TEST(Report, FailedBestConfigOmitsVote) {
  CvReport r = fake_report();
  r.results[1].failed = true;
  r.configs[0].failed_folds = 1;
  const auto j = summary_json(r);
  EXPECT_EQ(j["failed_runs"], 1);
  EXPECT_TRUE(j["vote"].is_null());
  EXPECT_EQ(j["fold_accuracy"]["folds"], 3);
  EXPECT_NE(folds_csv(r).find(",failed,"), std::string::npos);
}

TEST(Report, EmitWritesThreeFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "sheafnn_report_test";
  std::filesystem::remove_all(dir);
  const auto paths = emit_report(fake_report(), dir);
  ASSERT_EQ(paths.size(), 3u);
  for (const auto& p : paths) EXPECT_TRUE(std::filesystem::exists(p));
  EXPECT_EQ(json::parse(read_file(dir / "summary.json")), json::parse(summary_json(fake_report()).dump()));
  EXPECT_EQ(read_votes_csv(dir / "votes.csv").ids.size(), 4u);
  std::filesystem::remove_all(dir);
}
