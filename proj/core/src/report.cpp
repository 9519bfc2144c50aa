#include "sheafnn/report.hpp"

#include <charconv>
#include <sstream>

#include "sheafnn/errors.hpp"
#include "sheafnn/io.hpp"
#include "sheafnn/metrics.hpp"

namespace sheafnn::pipeline {

namespace fs = std::filesystem;

ordered_json vote_summary(const std::vector<int>& labels, const std::vector<std::vector<int>>& predictions,
                          std::size_t repetitions) {
  if (labels.size() != predictions.size()) throw ShapeError("vote_summary: length mismatch");
  const VoteResult votes = majority_vote(predictions, repetitions);
  ordered_json j;
  j["n"] = labels.size();
  if (labels.empty()) {
    j["correct"] = 0;
    j["accuracy"] = nullptr;
    return j;
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += votes.labels[i] == labels[i];
  const ClassificationMetrics m = classification_metrics(labels, votes.labels, votes.scores);
  const auto [lo, hi] = wilson_ci(correct, labels.size());
  j["correct"] = correct;
  j["accuracy"] = m.accuracy;
  j["ci95"] = {lo, hi};
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["auc"] = m.auc;
  j["precision_defined"] = m.precision_defined;
  j["recall_defined"] = m.recall_defined;
  j["f1_defined"] = m.f1_defined;
  j["auc_defined"] = m.auc_defined;
  return j;
}

ordered_json summary_json(const CvReport& report) {
  ordered_json j;
  j["model"] = to_string(report.grid.kind);
  j["grid_size"] = report.grid.size();
  j["k"] = report.options.k;
  j["repetitions"] = report.options.repetitions;
  j["seed"] = report.options.seed;
  j["pca_components"] = report.options.pca_components;
  j["n_samples"] = report.labels.size();
  std::size_t failed = 0;
  for (const FoldResult& r : report.results) failed += r.failed;
  j["failed_runs"] = failed;
  if (report.empty()) {
    j["best_config_index"] = nullptr;
    j["best_config"] = nullptr;
    j["selection"] = nullptr;
    j["fold_accuracy"] = nullptr;
    j["vote"] = nullptr;
    return j;
  }
  const ConfigSummary& best = report.configs[report.best_config];
  j["best_config_index"] = report.best_config;
  j["best_config"] = report.grid.at(report.best_config).to_json();
  j["selection"] = {{"mean_valid_accuracy", best.mean_valid_accuracy},
                    {"parameter_count", best.parameter_count},
                    {"failed_folds", best.failed_folds}};

  std::vector<double> fold_acc;
  std::vector<double> rep_sum(report.options.repetitions, 0.0);
  std::vector<std::size_t> rep_count(report.options.repetitions, 0);
  for (const FoldResult* r : report.best_results()) {
    if (r->failed) continue;
    fold_acc.push_back(r->test_accuracy);
    rep_sum[r->repetition] += r->test_accuracy;
    ++rep_count[r->repetition];
  }
  std::vector<double> rep_means;
  for (std::size_t i = 0; i < rep_sum.size(); ++i)
    if (rep_count[i] > 0) rep_means.push_back(rep_sum[i] / static_cast<double>(rep_count[i]));
  const MeanStd folds = mean_std(fold_acc);
  const MeanStd reps = mean_std(rep_means);
  j["fold_accuracy"] = {{"mean", folds.mean},
                        {"std_over_folds", folds.std},
                        {"std_over_repetition_means", reps.std},
                        {"folds", fold_acc.size()}};
  if (best.failed_folds > 0) {
    j["vote"] = nullptr;
  } else {
    j["vote"] = vote_summary(report.labels, report.node_predictions(), report.options.repetitions);
  }
  return j;
}

std::string folds_csv(const CvReport& report) {
  std::string out =
      "repetition,fold,config,status,epochs,best_epoch,parameters,train_accuracy,valid_accuracy,valid_loss,"
      "test_accuracy\n";
  for (const FoldResult& r : report.results) {
    out += std::to_string(r.repetition) + ',' + std::to_string(r.fold) + ',' + std::to_string(r.config) + ',';
    out += r.failed ? "failed" : "ok";
    out += ',' + std::to_string(r.epochs_run) + ',' + std::to_string(r.best_epoch) + ',' +
           std::to_string(r.parameter_count) + ',' + format_double(r.train_accuracy) + ',' +
           format_double(r.valid_accuracy) + ',' + format_double(r.valid_loss) + ',' +
           format_double(r.test_accuracy) + '\n';
  }
  return out;
}

std::string votes_csv(const CvReport& report) {
  const std::size_t reps = report.options.repetitions;
  std::string out = "id,label";
  for (std::size_t r = 0; r < reps; ++r) out += ",pred_r" + std::to_string(r);
  out += ",vote,score\n";
  if (report.empty()) return out;
  const auto preds = report.node_predictions();
  for (std::size_t i = 0; i < report.labels.size(); ++i) {
    if (preds[i].size() != reps) continue;  // node lost to a failed fold
    const VoteResult v = majority_vote({preds[i]}, reps);
    out += report.ids[i] + ',' + std::to_string(report.labels[i]);
    for (int p : preds[i]) out += ',' + std::to_string(p);
    out += ',' + std::to_string(v.labels[0]) + ',' + format_double(v.scores[0]) + '\n';
  }
  return out;
}

std::vector<fs::path> emit_report(const CvReport& report, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  const std::vector<fs::path> paths = {dir / "summary.json", dir / "folds.csv", dir / "votes.csv"};
  write_file_atomic(paths[0], summary_json(report).dump(2) + "\n");
  write_file_atomic(paths[1], folds_csv(report));
  write_file_atomic(paths[2], votes_csv(report));
  return paths;
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t comma; (comma = line.find(',', start)) != std::string_view::npos; start = comma + 1)
    out.push_back(line.substr(start, comma - start));
  out.push_back(line.substr(start));
  return out;
}

int parse_bit(std::string_view s, std::size_t line, std::string_view what) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw ParseError(line, std::string(what) + " must be 0 or 1");
}

}  // namespace

VotesTable parse_votes_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start < text.size();) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = nl + 1;
  }
  if (lines.empty()) throw ParseError(1, "missing header");
  const auto header = split(lines[0]);
  if (header.size() < 5 || header[0] != "id" || header[1] != "label" || header[header.size() - 2] != "vote" ||
      header.back() != "score")
    throw ParseError(1, "header must be id,label,pred_r0,...,vote,score");
  VotesTable t;
  t.repetitions = header.size() - 4;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const std::size_t line_no = li + 1;
    const auto f = split(lines[li]);
    if (f.size() != header.size())
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                    std::to_string(f.size()));
    t.ids.emplace_back(f[0]);
    t.labels.push_back(parse_bit(f[1], line_no, "label"));
    std::vector<int> preds;
    for (std::size_t r = 0; r < t.repetitions; ++r) preds.push_back(parse_bit(f[2 + r], line_no, "prediction"));
    t.predictions.push_back(std::move(preds));
    t.votes.push_back(parse_bit(f[f.size() - 2], line_no, "vote"));
    double score = 0.0;
    const std::string_view s = f.back();
    const auto res = std::from_chars(s.data(), s.data() + s.size(), score);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ParseError(line_no, "score is not a number");
    t.scores.push_back(score);
  }
  return t;
}

VotesTable read_votes_csv(const fs::path& path) { return parse_votes_csv(read_file(path)); }

ordered_json recompute_vote_summary(const VotesTable& table) {
  const VoteResult v = majority_vote(table.predictions, table.repetitions);
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    if (v.labels[i] != table.votes[i] || v.scores[i] != table.scores[i])
      throw ValidationError("votes: row for " + table.ids[i] + " disagrees with its predictions");
  }
  return vote_summary(table.labels, table.predictions, table.repetitions);
}

}  // namespace sheafnn::pipeline
