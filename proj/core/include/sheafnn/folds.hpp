#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sheafnn::pipeline {

/// Train/validation/test node indices for one fold of one repetition.
/// Each list is sorted ascending.
struct FoldPlan {
  std::size_t repetition = 0;
  std::size_t fold = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;
};

/// Fraction of the non-test samples held out for validation.
inline constexpr double kValidFraction = 0.1;

/// Stratified k-fold split: each class is shuffled and dealt round-robin
/// over the folds, the deal continuing where the previous class stopped, so
/// fold sizes differ by at most one. From each fold's non-test part a
/// stratified 10% validation set is drawn. Throws ContractError if a class
/// has fewer than k members or labels are not binary.
std::vector<FoldPlan> stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed,
                                       std::size_t repetition = 0);

/// `repetitions` independent stratified splits, repetition r seeded from
/// (seed, r). Returned in (repetition, fold) order.
std::vector<FoldPlan> repeated_stratified_kfold(std::span<const int> labels, std::size_t k,
                                                std::size_t repetitions, std::uint64_t seed);

/// Throws ContractError describing the first violated invariant: lists
/// disjoint and in range, and the test sets of each repetition partition
/// all n samples.
void check_fold_plans(std::span<const FoldPlan> plans, std::size_t n, std::size_t k);

}  // namespace sheafnn::pipeline
