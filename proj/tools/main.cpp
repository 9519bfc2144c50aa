// sheafnn command-line tool: synthetic data, graph dumps, single-split
// training, the repeated cross-validated grid search and report checks.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sheafnn/config.hpp"
#include "sheafnn/data.hpp"
#include "sheafnn/errors.hpp"
#include "sheafnn/experiment.hpp"
#include "sheafnn/folds.hpp"
#include "sheafnn/graph.hpp"
#include "sheafnn/io.hpp"
#include "sheafnn/pipeline.hpp"
#include "sheafnn/report.hpp"
#include "sheafnn/selfcheck.hpp"
#include "sheafnn/training.hpp"

namespace fs = std::filesystem;
using namespace sheafnn;
using pipeline::json;
using pipeline::ordered_json;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kFailure = 2;

fs::path default_out_dir() {
  if (const char* env = std::getenv("SHEAFNN_OUT"); env != nullptr && *env != '\0') return env;
  return "results";
}

void announce(const std::string& command, const ordered_json& resolved, std::uint64_t seed) {
  std::cerr << "sheafnn " << command << ": seed " << seed << "\n" << resolved.dump(2) << "\n";
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  std::size_t n = 224;
  double tumor_frac = 147.0 / 224.0;
  std::uint64_t seed = 0;
  std::string preset = "separable";
  std::string out;
};

int run_synth(const SynthArgs& a) {
  const auto preset = data::parse_preset(a.preset);
  announce("synth",
           {{"n", a.n}, {"tumor_frac", a.tumor_frac}, {"preset", a.preset}, {"out", a.out}}, a.seed);
  const auto ds = data::generate_synthetic(a.n, a.tumor_frac, a.seed, preset);
  data::save_csv(ds, a.out);
  std::cerr << "wrote " << ds.size() << " spectra (" << ds.positives() << " positive) to " << a.out << "\n";
  return kOk;
}

// --- graph -----------------------------------------------------------------

struct GraphArgs {
  std::string data;
  std::size_t pca = 50;
  std::string out;
};

int run_graph(const GraphArgs& a) {
  announce("graph", {{"data", a.data}, {"pca_components", a.pca}, {"out", a.out}}, 0);
  const auto ds = data::load_csv(a.data);
  const std::size_t k = std::min({a.pca, ds.size() - 1, ds.spectra.cols()});
  const auto model = data::fit_scaler_pca(ds.spectra, k);
  const Matrix features = data::transform(model, ds.spectra);
  const Graph g = build_similarity_graph(features);
  std::string csv = "u,v,id_u,id_v,similarity\n";
  for (const Edge& e : g.edges())
    csv += std::to_string(e.u) + ',' + std::to_string(e.v) + ',' + ds.ids[e.u] + ',' + ds.ids[e.v] + ',' +
           format_double(cosine_similarity(features, e.u, e.v)) + '\n';
  write_file_atomic(a.out, csv);
  std::cerr << "wrote " << g.num_edges() << " edges over " << g.num_nodes() << " nodes to " << a.out << "\n";
  return kOk;
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string synthetic = "separable";
  std::string model = "sheaf";
  std::string config;
  std::vector<std::string> set;
  std::uint64_t seed = 0;
  std::size_t k = 10;
  std::size_t fold = 0;
  std::size_t pca = 50;
  std::string out;
};

int run_train(const TrainArgs& a) {
  pipeline::ModelConfig cfg = pipeline::tuned_config(pipeline::parse_model_kind(a.model));
  if (!a.config.empty()) {
    const json j = json::parse(read_file(a.config));
    if (!j.is_object()) throw ValidationError(a.config + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) cfg.set(key, value);
  }
  for (const std::string& kv : a.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + kv + "'");
    const std::string value = kv.substr(eq + 1);
    json v;
    try {
      v = json::parse(value);
    } catch (const json::parse_error&) {
      v = value;  // bare words such as elu
    }
    cfg.set(kv.substr(0, eq), v);
  }
  cfg.validate();
  if (a.fold >= a.k) throw ValidationError("--fold must be below --k");

  const auto ds = a.data.empty()
                      ? data::generate_synthetic(224, 147.0 / 224.0, a.seed, data::parse_preset(a.synthetic))
                      : data::load_csv(a.data);
  ordered_json resolved = {{"data", a.data.empty() ? "synthetic:" + a.synthetic : a.data},
                           {"k", a.k},
                           {"fold", a.fold},
                           {"pca_components", a.pca},
                           {"config", cfg.to_json()}};
  announce("train", resolved, a.seed);

  const auto plans = pipeline::stratified_kfold(ds.labels, a.k, a.seed);
  const auto& plan = plans[a.fold];
  const auto r = pipeline::run_fold(ds, plan, cfg, pipeline::task_seed(a.seed, 0, a.fold, 0), a.pca);

  ordered_json out = resolved;
  out["seed"] = a.seed;
  out["status"] = r.failed ? "failed" : "ok";
  if (r.failed) out["failure"] = r.failure;
  out["epochs"] = r.epochs_run;
  out["best_epoch"] = r.best_epoch;
  out["parameters"] = r.parameter_count;
  out["train_accuracy"] = r.train_accuracy;
  out["valid_accuracy"] = r.valid_accuracy;
  out["valid_loss"] = r.valid_loss;
  out["test_accuracy"] = r.test_accuracy;
  const std::string text = out.dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(a.out, text);
  }
  std::cerr << "test accuracy " << r.test_accuracy << " after " << r.epochs_run << " epochs\n";
  return r.failed ? kFailure : kOk;
}

// --- cv --------------------------------------------------------------------

struct CvArgs {
  std::string config;
  std::optional<std::size_t> jobs;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool quiet = false;
};

int run_cv(const CvArgs& a) {
  pipeline::Experiment e = pipeline::load_experiment(a.config);
  if (a.seed) e.options.seed = *a.seed;
  if (a.jobs) e.options.jobs = *a.jobs;
  if (e.options.jobs == 0) throw ValidationError("--jobs must be positive");
  const fs::path out_dir = !a.out.empty() ? fs::path(a.out) : e.output_dir.value_or(default_out_dir());
  e.output_dir = out_dir;
  ordered_json resolved = e.to_json();
  resolved["jobs"] = e.options.jobs;
  announce("cv", resolved, e.options.seed);

  const auto ds = e.load_dataset();
  pipeline::ProgressFn progress;
  if (!a.quiet) {
    progress = [](std::size_t done, std::size_t total, const pipeline::FoldResult& r) {
      std::cerr << "[" << done << "/" << total << "] rep " << r.repetition << " fold " << r.fold << " config "
                << r.config << (r.failed ? " FAILED: " + r.failure : " test " + format_double(r.test_accuracy))
                << "\n";
    };
  }
  const auto report = pipeline::grid_search(ds, e.grid, e.options, progress);
  for (const auto& p : pipeline::emit_report(report, out_dir)) std::cerr << "wrote " << p.string() << "\n";
  const ordered_json summary = pipeline::summary_json(report);
  std::cerr << "fold accuracy " << summary["fold_accuracy"].dump() << "\n";
  return kOk;
}

// --- report ----------------------------------------------------------------

struct ReportArgs {
  std::string votes;
  std::string summary;
};

int run_report(const ReportArgs& a) {
  announce("report", {{"votes", a.votes}, {"summary", a.summary}}, 0);
  const auto table = pipeline::read_votes_csv(a.votes);
  const ordered_json vote = pipeline::recompute_vote_summary(table);
  std::cout << vote.dump(2) << "\n";
  if (!a.summary.empty()) {
    const json summary = json::parse(read_file(a.summary));
    if (!summary.contains("vote") || json(vote) != summary.at("vote")) {
      std::cerr << "vote metrics differ from " << a.summary << "\n";
      return kInvalid;
    }
    std::cerr << "vote metrics match " << a.summary << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sheaf and graph neural networks for spectra classification"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic spectra CSV");
  synth_cmd->add_option("--n", synth.n, "Number of samples")->capture_default_str();
  synth_cmd->add_option("--tumor-frac", synth.tumor_frac, "Fraction of samples labelled 1")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--preset", synth.preset, "separable or noisy")->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output CSV")->required();

  GraphArgs graph;
  auto* graph_cmd = app.add_subcommand("graph", "Build the cosine-similarity graph of a dataset");
  graph_cmd->add_option("--data", graph.data, "Input CSV")->required()->check(CLI::ExistingFile);
  graph_cmd->add_option("--pca", graph.pca, "PCA components")->capture_default_str();
  graph_cmd->add_option("--out", graph.out, "Output edge CSV")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train one configuration on one fold");
  train_cmd->add_option("--data", train.data, "Input CSV (default: synthetic)")->check(CLI::ExistingFile);
  train_cmd->add_option("--synthetic", train.synthetic, "Synthetic preset when no CSV is given")
      ->capture_default_str();
  train_cmd->add_option("--model", train.model, "gcn, sage, gat or sheaf")->capture_default_str();
  train_cmd->add_option("--config", train.config, "JSON object of hyperparameters")->check(CLI::ExistingFile);
  train_cmd->add_option("--set", train.set, "Hyperparameter override key=value (repeatable)");
  train_cmd->add_option("--seed", train.seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--k", train.k, "Number of folds")->capture_default_str();
  train_cmd->add_option("--fold", train.fold, "Fold used as test set")->capture_default_str();
  train_cmd->add_option("--pca", train.pca, "PCA components")->capture_default_str();
  train_cmd->add_option("--out", train.out, "Result JSON (default: stdout)");

  CvArgs cv;
  auto* cv_cmd = app.add_subcommand("cv", "Repeated stratified k-fold grid search from experiment.json");
  cv_cmd->add_option("--config", cv.config, "experiment.json")->required()->check(CLI::ExistingFile);
  cv_cmd->add_option("--jobs", cv.jobs, "Worker threads (results do not depend on it)");
  cv_cmd->add_option("--seed", cv.seed, "Override the master seed");
  cv_cmd->add_option("--out", cv.out, "Output directory (default: output_dir, then $SHEAFNN_OUT, then results)");
  cv_cmd->add_flag("--quiet", cv.quiet, "Suppress per-run progress");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Recompute vote metrics from votes.csv");
  report_cmd->add_option("--votes", report.votes, "votes.csv")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--summary", report.summary, "summary.json to compare against")
      ->check(CLI::ExistingFile);

  auto* selfcheck_cmd = app.add_subcommand("selfcheck", "Run the built-in invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*synth_cmd) return run_synth(synth);
    if (*graph_cmd) return run_graph(graph);
    if (*train_cmd) return run_train(train);
    if (*cv_cmd) return run_cv(cv);
    if (*report_cmd) return run_report(report);
    if (*selfcheck_cmd) {
      std::cerr << "sheafnn selfcheck: seed fixed per check\n";
      return run_selfcheck(std::cout) ? kOk : kInvalid;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kInvalid;
}
