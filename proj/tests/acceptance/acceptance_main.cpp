// Acceptance gate: one PASS/FAIL line per criterion.
//
//   sheafnn_acceptance <path to sheafnn_cli> <work dir>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sheafnn/config.hpp"
#include "sheafnn/data.hpp"
#include "sheafnn/experiment.hpp"
#include "sheafnn/folds.hpp"
#include "sheafnn/io.hpp"
#include "sheafnn/layers.hpp"
#include "sheafnn/linalg.hpp"
#include "sheafnn/metrics.hpp"
#include "sheafnn/model.hpp"
#include "sheafnn/ops.hpp"
#include "sheafnn/pipeline.hpp"
#include "sheafnn/report.hpp"
#include "sheafnn/sheaf.hpp"
#include "sheafnn/training.hpp"

namespace fs = std::filesystem;
using namespace sheafnn;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << what << "; ";
    pass = pass && ok;
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// 1. Constant sheaf with one-dimensional stalks gives the graph Laplacian.
void constant_sheaf_is_graph_laplacian(Outcome& o) {
  const auto start = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 20);
    const Graph g = oracle::random_graph(n, uniform01(rng), rng);
    worst = std::max(worst, oracle::max_abs_diff(sheaf_laplacian(constant_sheaf(g, 1)), oracle::graph_laplacian(g)));
  }
  const double t = seconds_since(start);
  o.require(worst == 0.0, "max error " + std::to_string(worst));
  o.require(t < 1.0, "took " + std::to_string(t) + " s");
  o.detail << "max error " << worst << ", " << t << " s";
}

// 2. Positive semi-definiteness and kernel dimension of constant sheaves.
void laplacian_spectrum(Outcome& o) {
  const auto start = Clock::now();
  Rng rng(202);
  double min_eig = 0.0;
  std::size_t kernel_mismatches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 10), d = 1 + uniform_index(rng, 4);
    const Graph g = oracle::random_graph(n, uniform01(rng), rng);
    const CellularSheaf s = oracle::random_sheaf(g, d, rng);
    const Matrix l = sheaf_laplacian(s);
    o.require(oracle::max_abs_diff(l, oracle::laplacian(s)) < 1e-12, "Laplacian differs from δᵀδ");
    min_eig = std::min(min_eig, sym_eig(l).values.front());
    const std::size_t kernel = global_sections(constant_sheaf(g, d)).cols();
    if (kernel != d * oracle::components(g)) ++kernel_mismatches;
  }
  const double t = seconds_since(start);
  o.require(min_eig >= -1e-10, "min eigenvalue " + std::to_string(min_eig));
  o.require(kernel_mismatches == 0, std::to_string(kernel_mismatches) + " kernel mismatches");
  o.require(t < 5.0, "took " + std::to_string(t) + " s");
  o.detail << "min eigenvalue " << min_eig << ", " << t << " s";
}

// 3. The Laplacian does not depend on edge orientation.
void orientation_invariance(Outcome& o) {
  Rng rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 9), d = 1 + uniform_index(rng, 4);
    const CellularSheaf s = oracle::random_sheaf(oracle::random_connected_graph(n, 0.4, rng), d, rng);
    Matrix delta = coboundary(s);
    for (std::size_t e = 0; e < s.graph().num_edges(); ++e)
      if (uniform01(rng) < 0.5)
        for (std::size_t r = e * d; r < (e + 1) * d; ++r)
          for (double& x : delta.row(r)) x = -x;
    worst = std::max(worst, oracle::max_abs_diff(matmul_tn(delta, delta), sheaf_laplacian(s)));
  }
  o.require(worst < 1e-12, "max change " + std::to_string(worst));
  o.detail << "max change " << worst;
}

// 4. A one-dimensional sheaf layer with identity restrictions is the
// simple-Laplacian layer.
void sheaf_layer_degenerates(Outcome& o) {
  Rng rng(404);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 9), f = 1 + uniform_index(rng, 5);
    const Graph g = oracle::random_connected_graph(n, 0.3, rng);
    const nn::GraphContext ctx(g);
    nn::LayerSpec spec;
    spec.kind = nn::ConvKind::sheaf_general;
    spec.in_dim = f;
    spec.out_dim = f;
    spec.stalk_dim = 1;
    spec.alpha = 0.5;
    spec.activation = nn::Activation::elu;
    spec.normalized_laplacian = false;
    nn::SheafLayer sheaf(spec, "s", rng);
    sheaf.param("gen_weight").value.fill(0.0);
    sheaf.param("gen_bias").value.fill(1.0);
    sheaf.param("w1").value.fill(1.0);
    nn::LayerSpec plain = spec;
    plain.kind = nn::ConvKind::laplacian;
    nn::GnnLayer reference(plain, "g", rng);
    reference.param("weight").value = sheaf.param("w2").value;
    const Matrix h = oracle::random_matrix(n, f, rng);
    nn::Tape t;
    const Matrix a = sheaf.forward(t, ctx, t.constant(h), false, rng).value();
    const Matrix b = reference.forward(t, ctx, t.constant(h), false, rng).value();
    worst = std::max(worst, oracle::max_abs_diff(a, b));
  }
  o.require(worst <= 1e-10, "max difference " + std::to_string(worst));
  o.detail << "max difference " << worst;
}

// 5. Finite-difference gradients of every model kind.
void model_gradients(Outcome& o) {
  const auto start = Clock::now();
  std::size_t mismatches = 0, checked = 0;
  for (nn::ModelKind kind : {nn::ModelKind::gcn, nn::ModelKind::sage, nn::ModelKind::gat, nn::ModelKind::sheaf_general}) {
    Rng rng(500 + static_cast<std::uint64_t>(kind));
    const std::size_t n = 8, p = 3;
    const Graph g = oracle::random_connected_graph(n, 0.3, rng);
    const nn::GraphContext ctx(g);
    const Matrix x = oracle::random_matrix(n, p, rng);
    std::vector<double> y;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n; ++i) {
      y.push_back(static_cast<double>(i % 2));
      rows.push_back(i);
    }
    nn::ModelSpec spec = nn::default_model_spec(kind, p);
    spec.num_layers = 2;
    spec.hidden_dim = 8;
    spec.stalk_dim = 2;
    spec.channels = 4;
    spec.activation = nn::Activation::elu;
    spec.dropout = 0.0;
    nn::Model model(spec, rng);
    auto loss = [&](bool backprop) {
      nn::Tape t;
      Rng drop(0);
      nn::Var l = nn::bce_with_logits(model.forward(t, ctx, x, true, drop), y, rows);
      if (backprop) t.backward(l);
      return l.value()(0, 0);
    };
    loss(true);
    const auto bad = oracle::check_gradients(model.params(), [&] { return loss(false); });
    mismatches += bad.size();
    for (nn::Param* param : model.params()) checked += param->value.size();
    if (!bad.empty())
      o.detail << pipeline::to_string(kind) << " " << bad.front().param << "[" << bad.front().entry << "] analytic "
               << bad.front().analytic << " numeric " << bad.front().numeric << "; ";
  }
  const double t = seconds_since(start);
  o.require(mismatches == 0, std::to_string(mismatches) + " mismatching entries");
  o.require(t < 60.0, "took " + std::to_string(t) + " s");
  o.detail << checked << " entries, " << t << " s";
}

// 6. Reference Wilson intervals.
void wilson_intervals(Outcome& o) {
  const auto [lo1, hi1] = pipeline::wilson_ci(221, 224);
  const auto [lo2, hi2] = pipeline::wilson_ci(208, 224);
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-3; };
  o.require(near(lo1, 0.961) && near(hi1, 0.995), "221/224 interval");
  o.require(near(lo2, 0.887) && near(hi2, 0.956), "208/224 interval");
  o.detail << "(" << lo1 << ", " << hi1 << ") and (" << lo2 << ", " << hi2 << ")";
}

// 7. Grid sizes.
void grid_sizes(Outcome& o) {
  const std::map<nn::ModelKind, std::size_t> want = {
      {nn::ModelKind::gcn, 972}, {nn::ModelKind::sage, 405}, {nn::ModelKind::gat, 756}, {nn::ModelKind::sheaf_general, 432}};
  for (const auto& [kind, size] : want) {
    const std::size_t got = pipeline::standard_grid(kind).size();
    o.require(got == size, pipeline::to_string(kind) + " grid has " + std::to_string(got));
    o.detail << pipeline::to_string(kind) << "=" << got << " ";
  }
}

// 8. Fold protocol on 224 samples with 5 repetitions of 10 folds.
void fold_protocol(Outcome& o) {
  const auto ds = data::generate_synthetic(224, 147.0 / 224.0, 8);
  const auto plans = pipeline::repeated_stratified_kfold(ds.labels, 10, 5, 8);
  o.require(plans.size() == 50, "expected 50 folds");
  try {
    pipeline::check_fold_plans(plans, ds.size(), 10);
  } catch (const std::exception& e) {
    o.require(false, e.what());
  }
  const double pos = static_cast<double>(ds.positives()) / 10.0, neg = static_cast<double>(ds.size() - ds.positives()) / 10.0;
  for (std::size_t rep = 0; rep < 5; ++rep) {
    std::vector<int> times_tested(ds.size(), 0);
    for (std::size_t f = 0; f < 10; ++f) {
      const auto& plan = plans[rep * 10 + f];
      std::size_t p = 0;
      for (std::size_t i : plan.test) {
        ++times_tested[i];
        p += static_cast<std::size_t>(ds.labels[i]);
      }
      const double q = static_cast<double>(plan.test.size() - p);
      o.require(std::abs(static_cast<double>(p) - pos) <= 1.0 && std::abs(q - neg) <= 1.0, "class counts off");
    }
    for (int c : times_tested) o.require(c == 1, "sample not tested exactly once");
  }
  // PCA must be fitted on training rows only: altering every other row
  // leaves the fitted model untouched.
  const auto& plan = plans[3];
  auto altered = ds;
  for (const auto* list : {&plan.test, &plan.valid})
    for (std::size_t i : *list)
      for (double& x : altered.spectra.row(i)) x = 7.0 * x - 2.0;
  const auto a = pipeline::prepare_fold(ds, plan, 50);
  const auto b = pipeline::prepare_fold(altered, plan, 50);
  o.require(a.pca.mean == b.pca.mean && a.pca.scale == b.pca.scale && a.pca.components == b.pca.components,
            "PCA depends on held-out rows");
  o.detail << "50 folds checked, leakage guard ok";
}

// 9. End-to-end accuracy on the synthetic presets.
void synthetic_accuracy(Outcome& o) {
  const auto start = Clock::now();
  auto run = [](const std::string& preset, const std::string& model, const pipeline::json& base) {
    pipeline::json j = {{"dataset", {{"synthetic", {{"preset", preset}, {"seed", 7}}}}},
                        {"model", model},
                        {"grid", "best"},
                        {"base", base},
                        {"k", 10},
                        {"repetitions", 5},
                        {"seed", 11}};
    const auto e = pipeline::parse_experiment(j);
    const auto report = pipeline::grid_search(e.load_dataset(), e.grid, e.options);
    return pipeline::summary_json(report)["fold_accuracy"]["mean"].get<double>();
  };
  const pipeline::json gnn_base = {{"min_epochs", 50}, {"patience", 30}};
  const pipeline::json sheaf_base = {{"d", 2}, {"f", 8}, {"num_layers", 2}, {"min_epochs", 50}, {"patience", 30}};
  const double sheaf_sep = run("separable", "sheaf", sheaf_base);
  const double sage_sep = run("separable", "sage", gnn_base);
  const double sheaf_noisy = run("noisy", "sheaf", sheaf_base);
  const double gcn_noisy = run("noisy", "gcn", gnn_base);
  const double t = seconds_since(start);
  o.require(sheaf_sep >= 0.95, "separable sheaf " + std::to_string(sheaf_sep));
  o.require(sage_sep >= 0.95, "separable sage " + std::to_string(sage_sep));
  o.require(sheaf_noisy >= gcn_noisy - 0.02, "noisy sheaf below gcn");
  o.require(t < 900.0, "took " + std::to_string(t) + " s");
  o.detail << "separable sheaf " << sheaf_sep << " sage " << sage_sep << "; noisy sheaf " << sheaf_noisy << " gcn "
           << gcn_noisy << "; " << t << " s";
}

// 10. cv output is byte-identical across runs and worker counts.
void cv_determinism(Outcome& o, const fs::path& cli, const fs::path& work) {
  const fs::path dir = work / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_file_atomic(dir / "experiment.json", R"({
  "dataset": {"synthetic": {"preset": "noisy", "n": 120, "seed": 3}},
  "model": "sheaf",
  "grid": {"d": [1, 2]},
  "base": {"f": 4, "epochs": 30, "min_epochs": 10, "patience": 10},
  "k": 10, "repetitions": 2, "seed": 5, "pca_components": 20
})");
  std::vector<std::string> runs = {"j1a", "j1b", "j2", "j3"};
  const std::map<std::string, int> jobs = {{"j1a", 1}, {"j1b", 1}, {"j2", 2}, {"j3", 3}};
  for (const auto& r : runs) {
    const std::string cmd = "\"" + cli.string() + "\" cv --quiet --jobs " + std::to_string(jobs.at(r)) + " --config \"" +
                            (dir / "experiment.json").string() + "\" --out \"" + (dir / r).string() +
                            "\" 2>/dev/null";
    const int status = std::system(cmd.c_str());
    o.require(WIFEXITED(status) && WEXITSTATUS(status) == 0, "cv run " + r + " failed");
  }
  if (!o.pass) return;
  for (const char* file : {"summary.json", "folds.csv", "votes.csv"}) {
    const std::string ref = read_file(dir / runs.front() / file);
    for (const auto& r : runs) o.require(read_file(dir / r / file) == ref, std::string(file) + " differs in " + r);
  }
  o.detail << "4 runs (jobs 1, 1, 2, 3) identical";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: sheafnn_acceptance <sheafnn_cli> <work dir>\n";
    return 2;
  }
  const fs::path cli = argv[1], work = argv[2];
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"constant 1-d sheaf Laplacian equals D-A", constant_sheaf_is_graph_laplacian},
      {"Laplacian is PSD with kernel d x components", laplacian_spectrum},
      {"Laplacian independent of edge orientation", orientation_invariance},
      {"1-d identity sheaf layer equals Laplacian layer", sheaf_layer_degenerates},
      {"finite-difference gradients for every model", model_gradients},
      {"Wilson intervals", wilson_intervals},
      {"grid sizes", grid_sizes},
      {"fold protocol and PCA leakage guard", fold_protocol},
      {"synthetic preset accuracy", synthetic_accuracy},
      {"cv byte-identical across runs and jobs", [&](Outcome& o) { cv_determinism(o, cli, work); }},
  };

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << " (" << o.detail.str()
              << ")" << std::endl;
  }
  return all ? 0 : 1;
}
