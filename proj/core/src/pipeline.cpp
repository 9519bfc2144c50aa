#include "sheafnn/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "sheafnn/errors.hpp"
#include "sheafnn/random.hpp"

namespace sheafnn::pipeline {

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& body) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

std::uint64_t task_seed(std::uint64_t master, std::size_t repetition, std::size_t fold, std::size_t config) {
  return derive_seed(master, {repetition, fold, config});
}

std::vector<const FoldResult*> CvReport::best_results() const {
  std::vector<const FoldResult*> out;
  for (const FoldResult& r : results)
    if (r.config == best_config) out.push_back(&r);
  return out;
}

std::vector<std::vector<int>> CvReport::node_predictions() const {
  std::vector<std::vector<int>> preds(labels.size());
  for (const FoldResult* r : best_results())
    for (std::size_t t = 0; t < r->test_nodes.size(); ++t) preds[r->test_nodes[t]].push_back(r->test_predictions[t]);
  return preds;
}

std::size_t select_best(const std::vector<ConfigSummary>& configs) {
  if (configs.empty()) throw ContractError("select_best: empty grid");
  auto better = [](const ConfigSummary& a, const ConfigSummary& b) {
    const bool a_ok = a.failed_folds == 0;
    const bool b_ok = b.failed_folds == 0;
    if (a_ok != b_ok) return a_ok;
    if (a.mean_valid_accuracy != b.mean_valid_accuracy) return a.mean_valid_accuracy > b.mean_valid_accuracy;
    if (a.parameter_count != b.parameter_count) return a.parameter_count < b.parameter_count;
    return a.index < b.index;
  };
  return std::min_element(configs.begin(), configs.end(), better)->index;
}

CvReport grid_search(const data::SpectraDataset& ds, const GridSpec& grid, const CvOptions& options,
                     const ProgressFn& progress) {
  ds.validate();
  const std::size_t n_configs = grid.size();
  if (n_configs == 0) throw ContractError("grid_search: empty grid");
  if (options.repetitions == 0) throw ContractError("grid_search: repetitions must be positive");
  std::vector<ModelConfig> configs;
  for (std::size_t c = 0; c < n_configs; ++c) {
    configs.push_back(grid.at(c));
    configs.back().validate();
  }

  CvReport report;
  report.grid = grid;
  report.options = options;
  report.ids = ds.ids;
  report.labels = ds.labels;

  const auto plans = repeated_stratified_kfold(ds.labels, options.k, options.repetitions, options.seed);
  check_fold_plans(plans, ds.size(), options.k);

  std::vector<PreparedFold> prepared(plans.size());
  parallel_for(plans.size(), options.jobs,
               [&](std::size_t i) { prepared[i] = prepare_fold(ds, plans[i], options.pca_components); });

  const std::size_t total = plans.size() * n_configs;
  report.results.resize(total);
  std::mutex progress_mutex;
  std::size_t done = 0;
  parallel_for(total, options.jobs, [&](std::size_t task) {
    const std::size_t p = task / n_configs;
    const std::size_t c = task % n_configs;
    const FoldPlan& plan = plans[p];
    FoldResult r = train_on_fold(prepared[p], configs[c], task_seed(options.seed, plan.repetition, plan.fold, c));
    r.config = c;
    report.results[task] = std::move(r);
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(++done, total, report.results[task]);
    }
  });

  report.configs.resize(n_configs);
  for (std::size_t c = 0; c < n_configs; ++c) report.configs[c].index = c;
  std::vector<std::size_t> ok(n_configs, 0);
  for (const FoldResult& r : report.results) {
    ConfigSummary& s = report.configs[r.config];
    s.parameter_count = r.parameter_count;
    if (r.failed) {
      ++s.failed_folds;
      continue;
    }
    ++ok[r.config];
    s.mean_valid_accuracy += r.valid_accuracy;
    s.mean_test_accuracy += r.test_accuracy;
  }
  for (std::size_t c = 0; c < n_configs; ++c) {
    if (ok[c] == 0) continue;
    report.configs[c].mean_valid_accuracy /= static_cast<double>(ok[c]);
    report.configs[c].mean_test_accuracy /= static_cast<double>(ok[c]);
  }
  report.best_config = select_best(report.configs);
  return report;
}

}  // namespace sheafnn::pipeline
