#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sheafnn/config.hpp"
#include "sheafnn/pipeline.hpp"

namespace sheafnn::pipeline {

/// Majority-vote metrics with the 95% Wilson interval of the vote accuracy.
ordered_json vote_summary(const std::vector<int>& labels, const std::vector<std::vector<int>>& predictions,
                          std::size_t repetitions);

ordered_json summary_json(const CvReport& report);
std::string folds_csv(const CvReport& report);
std::string votes_csv(const CvReport& report);

/// Writes summary.json, folds.csv and votes.csv into `dir` (created if
/// missing), each atomically. Returns the written paths.
std::vector<std::filesystem::path> emit_report(const CvReport& report, const std::filesystem::path& dir);

/// Parsed votes.csv.
struct VotesTable {
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<std::vector<int>> predictions;
  std::vector<int> votes;
  std::vector<double> scores;
  std::size_t repetitions = 0;
};

VotesTable parse_votes_csv(std::string_view text);
VotesTable read_votes_csv(const std::filesystem::path& path);

/// Recomputes the vote block of summary.json from a votes table. Throws
/// ValidationError if the stored vote or score columns disagree with the
/// predictions.
ordered_json recompute_vote_summary(const VotesTable& table);

}  // namespace sheafnn::pipeline
