#include "sheafnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "sheafnn/errors.hpp"
#include "sheafnn/linalg.hpp"
#include "sheafnn/model.hpp"
#include "sheafnn/ops.hpp"
#include "sheafnn/optim.hpp"
#include "sheafnn/random.hpp"

namespace sheafnn::pipeline {

PreparedFold prepare_fold(const data::SpectraDataset& ds, const FoldPlan& plan, std::size_t pca_components) {
  ds.validate();
  if (plan.train.size() < 2) throw ContractError("prepare_fold: need at least 2 training samples");
  PreparedFold out;
  out.plan = plan;
  out.labels = ds.labels;
  const std::size_t k = std::min({pca_components, plan.train.size() - 1, ds.spectra.cols()});
  out.pca = data::fit_scaler_pca(select_rows(ds.spectra, plan.train), k);
  out.features = data::transform(out.pca, ds.spectra);
  out.context = std::make_shared<const nn::GraphContext>(build_similarity_graph(out.features));
  return out;
}

namespace {

double bce(const std::vector<double>& logits, const std::vector<int>& labels,
           const std::vector<std::size_t>& rows) {
  if (rows.empty()) return 0.0;
  double loss = 0.0;
  for (std::size_t r : rows) {
    const double x = logits[r];
    loss += std::max(x, 0.0) - x * labels[r] + std::log1p(std::exp(-std::abs(x)));
  }
  return loss / static_cast<double>(rows.size());
}

double rows_accuracy(const std::vector<double>& logits, const std::vector<int>& labels,
                     const std::vector<std::size_t>& rows) {
  if (rows.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t r : rows) hits += (logits[r] > 0.0 ? 1 : 0) == labels[r];
  return static_cast<double>(hits) / static_cast<double>(rows.size());
}

std::vector<double> evaluate(nn::Model& model, const PreparedFold& fold, Rng& rng) {
  nn::Tape tape;
  const nn::Var out = model.forward(tape, *fold.context, fold.features, false, rng);
  const Matrix& z = out.value();
  std::vector<double> logits(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) logits[i] = z(i, 0);
  return logits;
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

FoldResult train_on_fold(const PreparedFold& fold, const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  FoldResult res;
  res.repetition = fold.plan.repetition;
  res.fold = fold.plan.fold;

  Rng init_rng(derive_seed(seed, {0}));
  Rng drop_rng(derive_seed(seed, {1}));
  nn::Model model(config.model_spec(fold.features.cols()), init_rng);
  res.parameter_count = model.parameter_count();

  const auto& labels = fold.labels;
  const auto& plan = fold.plan;
  std::vector<double> targets(labels.size(), 0.0);
  const double ls = config.label_smoothing;
  for (std::size_t i = 0; i < labels.size(); ++i) targets[i] = labels[i] * (1.0 - ls) + 0.5 * ls;

  auto params = model.params();
  optim::Adam adam(params, {.lr = config.lr, .weight_decay = config.weight_decay});
  optim::PlateauScheduler scheduler(config.lr, config.sched_factor, config.sched_patience);
  optim::EarlyStopper stopper(config.patience, config.min_epochs);

  std::optional<nn::Model::State> best_state;
  double best_acc = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    {
      nn::Tape tape;
      const nn::Var logits = model.forward(tape, *fold.context, fold.features, true, drop_rng);
      const nn::Var loss = nn::bce_with_logits(logits, targets, plan.train);
      if (!std::isfinite(loss.value()(0, 0))) {
        res.failed = true;
        res.failure = "non-finite training loss at epoch " + std::to_string(epoch);
        break;
      }
      tape.backward(loss);
    }
    try {
      optim::clip_gradients(params, config.grad_clip);
      adam.step();
    } catch (const NumericError& e) {
      res.failed = true;
      res.failure = "epoch " + std::to_string(epoch) + ": " + e.what();
      break;
    }
    res.epochs_run = epoch;

    const std::vector<double> logits = evaluate(model, fold, drop_rng);
    if (!all_finite(logits)) {
      res.failed = true;
      res.failure = "non-finite output at epoch " + std::to_string(epoch);
      break;
    }
    const double val_loss = bce(logits, labels, plan.valid);
    const double val_acc = rows_accuracy(logits, labels, plan.valid);
    adam.set_lr(scheduler.step(val_loss));
    if (val_acc > best_acc || (val_acc == best_acc && val_loss < best_loss)) {
      best_acc = val_acc;
      best_loss = val_loss;
      best_state = model.snapshot();
      res.best_epoch = epoch;
    }
    if (stopper.check(epoch, val_acc)) break;
  }

  if (res.failed) return res;
  if (best_state) model.restore(*best_state);
  const std::vector<double> logits = evaluate(model, fold, drop_rng);
  if (!all_finite(logits)) {
    res.failed = true;
    res.failure = "non-finite output of the selected checkpoint";
    return res;
  }
  res.train_accuracy = rows_accuracy(logits, labels, plan.train);
  res.valid_accuracy = rows_accuracy(logits, labels, plan.valid);
  res.valid_loss = bce(logits, labels, plan.valid);
  res.test_accuracy = rows_accuracy(logits, labels, plan.test);
  res.test_nodes = plan.test;
  for (std::size_t r : plan.test) {
    res.test_predictions.push_back(logits[r] > 0.0 ? 1 : 0);
    res.test_scores.push_back(1.0 / (1.0 + std::exp(-logits[r])));
  }
  return res;
}

FoldResult run_fold(const data::SpectraDataset& ds, const FoldPlan& plan, const ModelConfig& config,
                    std::uint64_t seed, std::size_t pca_components) {
  return train_on_fold(prepare_fold(ds, plan, pca_components), config, seed);
}

}  // namespace sheafnn::pipeline
