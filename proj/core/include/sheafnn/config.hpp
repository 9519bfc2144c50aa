#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sheafnn/model.hpp"

namespace sheafnn::pipeline {

using nlohmann::json;
using nlohmann::ordered_json;

/// Every hyperparameter of one training run.
struct ModelConfig {
  nn::ModelKind kind = nn::ModelKind::gcn;
  std::size_t hidden_dim = 32;
  std::size_t num_layers = 2;
  double dropout = 0.1;
  double lr = 0.005;
  double weight_decay = 1e-4;
  std::size_t patience = 80;
  std::size_t min_epochs = 200;
  std::size_t sched_patience = 40;
  double sched_factor = 0.5;
  double grad_clip = 2.0;
  std::size_t heads = 2;
  std::size_t stalk_dim = 4;   // d
  std::size_t channels = 16;   // f
  nn::Activation activation = nn::Activation::relu;
  double alpha = 1.0;
  nn::Normalization normalization = nn::Normalization::batch_then_layer;
  bool normalized_laplacian = true;
  double label_smoothing = 0.0;
  std::size_t epochs = 400;

  /// Sets one field by name (aliases: hidden, layers, wd, d, f, gamma, ls,
  /// clip). Throws ValidationError on unknown names or ill-typed values.
  void set(std::string_view name, const json& value);
  /// Throws ValidationError on out-of-range values.
  void validate() const;

  nn::ModelSpec model_spec(std::size_t in_dim) const;
  ordered_json to_json() const;
  static ModelConfig from_json(const json& j);

  bool operator==(const ModelConfig&) const = default;
};

/// Kind-specific defaults (activation and skip weight follow the usual
/// recipe of each architecture).
ModelConfig default_config(nn::ModelKind kind);

/// Cartesian product of named value lists applied on top of a base config.
/// Enumeration order: the first axis varies slowest.
struct GridSpec {
  nn::ModelKind kind = nn::ModelKind::gcn;
  ModelConfig base;
  std::vector<std::pair<std::string, std::vector<json>>> axes;

  std::size_t size() const;
  ModelConfig at(std::size_t index) const;
  ordered_json to_json() const;
  /// `axes` is an object of name → list; fields in `overrides` are applied
  /// to the kind defaults first.
  static GridSpec from_json(nn::ModelKind kind, const json& axes, const json& overrides);
};

/// The full hyperparameter search space of each model kind.
GridSpec standard_grid(nn::ModelKind kind);
/// The tuned configuration of each kind.
ModelConfig tuned_config(nn::ModelKind kind);

std::string to_string(nn::ModelKind k);
std::string to_string(nn::Activation a);
std::string to_string(nn::Normalization n);
nn::ModelKind parse_model_kind(std::string_view s);
nn::Activation parse_activation(std::string_view s);
nn::Normalization parse_normalization(std::string_view s);

}  // namespace sheafnn::pipeline
