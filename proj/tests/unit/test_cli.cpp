#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "sheafnn/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "sheafnn_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

/// Runs the CLI with stderr discarded and stdout captured to a file.
int run(const std::string& args, std::string* out = nullptr) {
  const fs::path stdout_file = work_dir() / "stdout.txt";
  const std::string cmd =
      std::string("\"") + SHEAFNN_CLI_PATH + "\" " + args + " > \"" + stdout_file.string() + "\" 2>/dev/null";
  const int status = std::system(cmd.c_str());
  if (out != nullptr) *out = sheafnn::read_file(stdout_file);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string path(const std::string& name) { return (work_dir() / name).string(); }

void write_experiment(const std::string& name, const std::string& out_dir) {
  sheafnn::write_file_atomic(work_dir() / name, R"({
    "dataset": {"synthetic": {"preset": "separable", "n": 60, "seed": 2}},
    "model": "gcn",
    "grid": {"hidden_dim": [4, 8]},
    "base": {"epochs": 15, "min_epochs": 5, "patience": 5},
    "k": 3, "repetitions": 2, "seed": 5, "pca_components": 8,
    "output_dir": ")" + out_dir + R"("})");
}

}  // namespace

TEST(Cli, SynthAndGraph) {
  ASSERT_EQ(run("synth --n 40 --seed 3 --out " + path("s.csv")), 0);
  const std::string csv = sheafnn::read_file(path("s.csv"));
  EXPECT_EQ(csv.substr(0, csv.find(',')), "id");
  ASSERT_EQ(run("synth --n 40 --seed 3 --out " + path("s2.csv")), 0);
  EXPECT_EQ(sheafnn::read_file(path("s2.csv")), csv);
  ASSERT_EQ(run("graph --data " + path("s.csv") + " --pca 5 --out " + path("edges.csv")), 0);
  const std::string edges = sheafnn::read_file(path("edges.csv"));
  EXPECT_EQ(edges.substr(0, edges.find('\n')), "u,v,id_u,id_v,similarity");
  EXPECT_EQ(run("synth --n 40 --preset fuzzy --out " + path("x.csv")), 1);
}

TEST(Cli, TrainPrintsResultJson) {
  std::string out;
  ASSERT_EQ(run("train --model gcn --set epochs=12 --set min_epochs=4 --set hidden_dim=8 --k 4 --fold 1 --pca 8", &out), 0);
  const json j = json::parse(out);
  EXPECT_EQ(j["status"], "ok");
  EXPECT_EQ(j["fold"], 1);
  EXPECT_EQ(j["config"]["hidden_dim"], 8);
  EXPECT_LE(j["epochs"].get<int>(), 12);
  // --out takes precedence over stdout.
  ASSERT_EQ(run("train --model gcn --set epochs=12 --set min_epochs=4 --k 4 --pca 8 --out " + path("t.json"), &out), 0);
  EXPECT_TRUE(out.empty());
  EXPECT_EQ(json::parse(sheafnn::read_file(path("t.json")))["status"], "ok");
}

TEST(Cli, InvalidInputExitsOne) {
  EXPECT_EQ(run("train --model mlp"), 1);
  EXPECT_EQ(run("train --set lr=-1"), 1);
  EXPECT_EQ(run("train --set nonsense=3"), 1);
  EXPECT_EQ(run("train --k 3 --fold 3"), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run(""), 1);
  sheafnn::write_file_atomic(work_dir() / "bad.json", R"({"model": "gcn"})");
  EXPECT_EQ(run("cv --config " + path("bad.json")), 1);
}

TEST(Cli, RuntimeFailureExitsTwo) {
  // Output location is a regular file, so the directory cannot be created.
  sheafnn::write_file_atomic(work_dir() / "blocker", "x");
  write_experiment("blocked.json", path("blocker") + "/sub");
  EXPECT_EQ(run("cv --quiet --config " + path("blocked.json")), 2);
}

TEST(Cli, CvIsByteIdenticalAcrossJobCounts) {
  write_experiment("exp.json", "from_file");
  ASSERT_EQ(run("cv --quiet --jobs 1 --config " + path("exp.json") + " --out " + path("cv1")), 0);
  ASSERT_EQ(run("cv --quiet --jobs 3 --config " + path("exp.json") + " --out " + path("cv3")), 0);
  for (const char* f : {"summary.json", "folds.csv", "votes.csv"})
    EXPECT_EQ(sheafnn::read_file(work_dir() / "cv1" / f), sheafnn::read_file(work_dir() / "cv3" / f)) << f;
  const json summary = json::parse(sheafnn::read_file(work_dir() / "cv1" / "summary.json"));
  EXPECT_EQ(summary["grid_size"], 2);
  EXPECT_EQ(summary["n_samples"], 60);

  // Without --out the experiment's output_dir wins, resolved next to the file.
  ASSERT_EQ(run("cv --quiet --config " + path("exp.json")), 0);
  EXPECT_TRUE(fs::exists(work_dir() / "from_file" / "summary.json"));

  // A different seed changes the result.
  ASSERT_EQ(run("cv --quiet --seed 6 --config " + path("exp.json") + " --out " + path("cv6")), 0);
  EXPECT_NE(sheafnn::read_file(work_dir() / "cv1" / "folds.csv"), sheafnn::read_file(work_dir() / "cv6" / "folds.csv"));

  // report agrees with the summary and detects tampering.
  const std::string votes = path("cv1") + "/votes.csv";
  const std::string summary_path = path("cv1") + "/summary.json";
  std::string out;
  ASSERT_EQ(run("report --votes " + votes + " --summary " + summary_path, &out), 0);
  EXPECT_EQ(json::parse(out), summary["vote"]);
  json tampered = summary;
  tampered["vote"]["correct"] = tampered["vote"]["correct"].get<int>() + 1;
  sheafnn::write_file_atomic(work_dir() / "tampered.json", tampered.dump());
  EXPECT_EQ(run("report --votes " + votes + " --summary " + path("tampered.json")), 1);
}

TEST(Cli, Selfcheck) {
  std::string out;
  EXPECT_EQ(run("selfcheck", &out), 0);
  EXPECT_NE(out.find("ok    "), std::string::npos);
  EXPECT_EQ(out.find("FAIL"), std::string::npos);
}
