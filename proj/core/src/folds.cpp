#include "sheafnn/folds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sheafnn/errors.hpp"
#include "sheafnn/random.hpp"

namespace sheafnn::pipeline {

std::vector<FoldPlan> stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed,
                                       std::size_t repetition) {
  if (k < 2) throw ContractError("stratified_kfold: k must be at least 2");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw ContractError("stratified_kfold: labels must be binary");
    by_class[labels[i]].push_back(i);
  }
  for (int c = 0; c < 2; ++c)
    if (by_class[c].size() < k)
      throw ContractError("stratified_kfold: class " + std::to_string(c) + " has " +
                          std::to_string(by_class[c].size()) + " members, fewer than k=" + std::to_string(k));

  Rng rng(derive_seed(seed, {repetition}));
  std::vector<std::size_t> fold_of(labels.size());
  std::size_t dealt = 0;
  for (auto& members : by_class) {
    shuffle(members, rng);
    for (std::size_t i : members) fold_of[i] = dealt++ % k;
  }

  std::vector<FoldPlan> plans(k);
  for (std::size_t f = 0; f < k; ++f) {
    FoldPlan& plan = plans[f];
    plan.repetition = repetition;
    plan.fold = f;
    Rng valid_rng(derive_seed(seed, {repetition, f}));
    for (int c = 0; c < 2; ++c) {
      std::vector<std::size_t> rest;
      for (std::size_t i : by_class[c]) {
        if (fold_of[i] == f) plan.test.push_back(i);
        else rest.push_back(i);
      }
      std::sort(rest.begin(), rest.end());
      shuffle(rest, valid_rng);
      const auto n_valid = static_cast<std::size_t>(
          std::llround(kValidFraction * static_cast<double>(rest.size())));
      plan.valid.insert(plan.valid.end(), rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_valid));
      plan.train.insert(plan.train.end(), rest.begin() + static_cast<std::ptrdiff_t>(n_valid), rest.end());
    }
    std::sort(plan.train.begin(), plan.train.end());
    std::sort(plan.valid.begin(), plan.valid.end());
    std::sort(plan.test.begin(), plan.test.end());
  }
  return plans;
}

std::vector<FoldPlan> repeated_stratified_kfold(std::span<const int> labels, std::size_t k,
                                                std::size_t repetitions, std::uint64_t seed) {
  std::vector<FoldPlan> all;
  for (std::size_t r = 0; r < repetitions; ++r) {
    auto plans = stratified_kfold(labels, k, seed, r);
    std::move(plans.begin(), plans.end(), std::back_inserter(all));
  }
  return all;
}

void check_fold_plans(std::span<const FoldPlan> plans, std::size_t n, std::size_t k) {
  auto fail = [](const FoldPlan& p, const std::string& what) {
    throw ContractError("fold plan (rep " + std::to_string(p.repetition) + ", fold " + std::to_string(p.fold) +
                        "): " + what);
  };
  std::vector<std::vector<std::size_t>> tested;  // per repetition, count per node
  for (const FoldPlan& p : plans) {
    if (p.fold >= k) fail(p, "fold index out of range");
    std::vector<int> role(n, 0);
    for (const auto* list : {&p.train, &p.valid, &p.test})
      for (std::size_t i : *list) {
        if (i >= n) fail(p, "node index out of range");
        if (role[i]++ != 0) fail(p, "node " + std::to_string(i) + " appears twice");
      }
    if (tested.size() <= p.repetition) tested.resize(p.repetition + 1, std::vector<std::size_t>(n, 0));
    for (std::size_t i : p.test) ++tested[p.repetition][i];
  }
  for (std::size_t r = 0; r < tested.size(); ++r)
    for (std::size_t i = 0; i < n; ++i)
      if (tested[r][i] != 1)
        throw ContractError("fold plan: node " + std::to_string(i) + " is tested " + std::to_string(tested[r][i]) +
                            " times in repetition " + std::to_string(r));
}

}  // namespace sheafnn::pipeline
