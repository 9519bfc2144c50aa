#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "sheafnn/tape.hpp"

namespace sheafnn::optim {

using nn::Param;

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// Adam with bias correction and decoupled weight decay
/// (θ ← θ − lr·wd·θ − lr·m̂/(√v̂ + eps)). Gradients are zeroed after each step.
class Adam {
 public:
  Adam(std::vector<Param*> params, AdamOptions options);

  /// Throws NumericError (leaving parameters untouched) if any gradient is
  /// not finite.
  void step();

  double lr() const noexcept { return options_.lr; }
  void set_lr(double lr) noexcept { options_.lr = lr; }
  std::size_t steps() const noexcept { return t_; }

 private:
  std::vector<Param*> params_;
  AdamOptions options_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::size_t t_ = 0;
};

/// Rescales all gradients by max_norm/‖g‖ when the global L2 norm exceeds
/// max_norm. Returns the factor applied (1 when unchanged).
double clip_gradients(std::span<Param* const> params, double max_norm);

/// Reduce-on-plateau learning-rate schedule for a metric where lower is
/// better. A value counts as an improvement when it is below
/// best·(1 − threshold).
class PlateauScheduler {
 public:
  PlateauScheduler(double lr, double factor = 0.5, std::size_t patience = 10,
                   double threshold = 1e-4, double min_lr = 1e-6);

  /// Feeds one epoch's metric; returns the learning rate to use next.
  double step(double metric);
  double lr() const noexcept { return lr_; }

 private:
  double lr_;
  double factor_;
  std::size_t patience_;
  double threshold_;
  double min_lr_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t bad_epochs_ = 0;
};

/// Stops once `min_epochs` have passed and the monitored metric (higher is
/// better) has not strictly improved for more than `patience` epochs.
class EarlyStopper {
 public:
  EarlyStopper(std::size_t patience, std::size_t min_epochs);

  bool check(std::size_t epoch, double metric);
  double best() const noexcept { return best_; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }

 private:
  std::size_t patience_;
  std::size_t min_epochs_;
  double best_ = -std::numeric_limits<double>::infinity();
  std::size_t best_epoch_ = 0;
};

}  // namespace sheafnn::optim
