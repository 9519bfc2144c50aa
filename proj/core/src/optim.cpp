#include "sheafnn/optim.hpp"

#include <algorithm>
#include <cmath>

#include "sheafnn/errors.hpp"

namespace sheafnn::optim {

Adam::Adam(std::vector<Param*> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (Param* p : params_) {
    m_.emplace_back(p->value.rows(), p->value.cols());
    v_.emplace_back(p->value.rows(), p->value.cols());
  }
}

void Adam::step() {
  for (Param* p : params_) {
    if (!p->grad.all_finite()) throw NumericError("adam: non-finite gradient in " + p->name);
  }
  ++t_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = options_.lr;
  const double decay = 1.0 - lr * options_.weight_decay;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto theta = params_[i]->value.data();
    auto g = params_[i]->grad.data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      theta[k] = theta[k] * decay - lr * mhat / (std::sqrt(vhat) + options_.eps);
    }
    params_[i]->zero_grad();
  }
}

double clip_gradients(std::span<Param* const> params, double max_norm) {
  if (!(max_norm > 0.0)) throw ContractError("clip_gradients: max_norm must be positive");
  double sq = 0.0;
  for (const Param* p : params)
    for (double g : p->grad.data()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (!(norm > max_norm)) return 1.0;
  const double factor = max_norm / norm;
  for (Param* p : params) p->grad *= factor;
  return factor;
}

PlateauScheduler::PlateauScheduler(double lr, double factor, std::size_t patience,
                                   double threshold, double min_lr)
    : lr_(lr), factor_(factor), patience_(patience), threshold_(threshold), min_lr_(min_lr) {
  if (!(factor > 0.0 && factor < 1.0)) throw ContractError("PlateauScheduler: factor must lie in (0, 1)");
  lr_ = std::max(lr_, min_lr_);
}

double PlateauScheduler::step(double metric) {
  if (metric < best_ * (1.0 - threshold_) || (std::isinf(best_) && metric < best_)) {
    best_ = metric;
    bad_epochs_ = 0;
  } else {
    ++bad_epochs_;
  }
  if (bad_epochs_ > patience_) {
    const double reduced = std::max(lr_ * factor_, min_lr_);
    if (lr_ - reduced > 1e-12) lr_ = reduced;
    bad_epochs_ = 0;
  }
  return lr_;
}

EarlyStopper::EarlyStopper(std::size_t patience, std::size_t min_epochs)
    : patience_(patience), min_epochs_(min_epochs) {}

bool EarlyStopper::check(std::size_t epoch, double metric) {
  if (metric > best_) {
    best_ = metric;
    best_epoch_ = epoch;
  }
  return epoch >= min_epochs_ && epoch - best_epoch_ > patience_;
}

}  // namespace sheafnn::optim
