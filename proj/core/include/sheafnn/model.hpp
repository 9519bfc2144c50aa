#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "sheafnn/layers.hpp"

namespace sheafnn::nn {

enum class ModelKind { gcn, sage, gat, sheaf_general };

/// Architecture of a node classifier. GNN kinds stack `num_layers` layers of
/// width `hidden_dim`; the sheaf kind lifts the input to n·d rows of
/// `channels` columns and stacks `num_layers` sheaf layers. Both end in a
/// linear read-out producing one logit per node.
struct ModelSpec {
  ModelKind kind = ModelKind::gcn;
  std::size_t in_dim = 0;
  std::size_t hidden_dim = 32;
  std::size_t num_layers = 2;
  double dropout = 0.0;
  std::size_t heads = 2;
  std::size_t stalk_dim = 4;
  std::size_t channels = 16;
  Activation activation = Activation::relu;
  double alpha = 1.0;  // skip weight of the hidden layers
  Normalization normalization = Normalization::batch_then_layer;
  bool normalized_laplacian = true;
};

/// Recipe defaults per kind: α and σ of the hidden layers.
ModelSpec default_model_spec(ModelKind kind, std::size_t in_dim);

class Model {
 public:
  Model(const ModelSpec& spec, Rng& init_rng);

  /// n×1 logits.
  Var forward(Tape& tape, const GraphContext& ctx, const Matrix& features, bool training, Rng& rng);

  std::vector<Param*> params();
  std::size_t parameter_count() const;
  const ModelSpec& spec() const noexcept { return spec_; }
  const std::vector<std::unique_ptr<Layer>>& layers() const noexcept { return layers_; }

  /// Parameter values plus normalization running statistics.
  struct State {
    std::vector<Matrix> values;
  };
  State snapshot();
  void restore(const State& state);

 private:
  std::vector<Matrix*> state_slots();

  ModelSpec spec_;
  std::unique_ptr<Param> encoder_w_, encoder_b_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::unique_ptr<Param> readout_w_, readout_b_;
};

}  // namespace sheafnn::nn
