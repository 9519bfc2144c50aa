#include "sheafnn/model.hpp"

#include <string>

#include "sheafnn/errors.hpp"

namespace sheafnn::nn {

ModelSpec default_model_spec(ModelKind kind, std::size_t in_dim) {
  ModelSpec spec;
  spec.kind = kind;
  spec.in_dim = in_dim;
  switch (kind) {
    case ModelKind::gcn:
      spec.alpha = 1.0;
      spec.activation = Activation::relu;
      break;
    case ModelKind::sage:
      spec.alpha = 0.05;
      spec.activation = Activation::relu;
      break;
    case ModelKind::gat:
      spec.alpha = 1.0;
      spec.activation = Activation::elu;
      break;
    case ModelKind::sheaf_general:
      spec.alpha = 1.0;
      spec.activation = Activation::elu;
      break;
  }
  return spec;
}

Model::Model(const ModelSpec& spec, Rng& init_rng) : spec_(spec) {
  if (spec_.in_dim == 0) throw ContractError("Model: input dimension must be positive");
  if (spec_.num_layers == 0) throw ContractError("Model: at least one layer is required");

  const std::size_t q = spec_.num_layers;
  if (spec_.kind == ModelKind::sheaf_general) {
    const std::size_t d = spec_.stalk_dim;
    const std::size_t f = spec_.channels;
    if (d == 0 || f == 0) throw ContractError("Model: stalk dimension and channels must be positive");
    encoder_w_ = std::make_unique<Param>("encoder.weight", glorot_uniform(spec_.in_dim, d * f, init_rng));
    encoder_b_ = std::make_unique<Param>("encoder.bias", Matrix(1, d * f));
    for (std::size_t i = 0; i < q; ++i) {
      LayerSpec ls;
      ls.kind = ConvKind::sheaf_general;
      ls.in_dim = f;
      ls.out_dim = f;
      ls.alpha = spec_.alpha;
      ls.activation = spec_.activation;
      ls.dropout = spec_.dropout;
      ls.normalization = i + 1 < q ? spec_.normalization : Normalization::none;
      ls.stalk_dim = d;
      ls.normalized_laplacian = spec_.normalized_laplacian;
      layers_.push_back(make_layer(ls, "layer" + std::to_string(i), init_rng));
    }
    readout_w_ = std::make_unique<Param>("readout.weight", glorot_uniform(d * f, 1, init_rng));
  } else {
    const ConvKind conv = spec_.kind == ModelKind::gcn    ? ConvKind::gcn
                          : spec_.kind == ModelKind::sage ? ConvKind::sage
                                                          : ConvKind::gat;
    for (std::size_t i = 0; i < q; ++i) {
      const bool last = i + 1 == q;
      LayerSpec ls;
      ls.kind = conv;
      ls.in_dim = i == 0 ? spec_.in_dim : spec_.hidden_dim;
      ls.out_dim = spec_.hidden_dim;
      ls.alpha = last ? 0.0 : spec_.alpha;
      ls.activation = last ? Activation::identity : spec_.activation;
      ls.dropout = spec_.dropout;
      ls.normalization = last ? Normalization::none : spec_.normalization;
      ls.heads = spec_.heads;
      layers_.push_back(make_layer(ls, "layer" + std::to_string(i), init_rng));
    }
    readout_w_ = std::make_unique<Param>("readout.weight", glorot_uniform(spec_.hidden_dim, 1, init_rng));
  }
  readout_b_ = std::make_unique<Param>("readout.bias", Matrix(1, 1));
}

Var Model::forward(Tape& tape, const GraphContext& ctx, const Matrix& features, bool training,
                   Rng& rng) {
  const std::size_t n = ctx.graph.num_nodes();
  if (features.rows() != n || features.cols() != spec_.in_dim) {
    throw ShapeError("Model: features " + shape_of(features) + ", expected " + std::to_string(n) +
                     "x" + std::to_string(spec_.in_dim));
  }
  Var h = tape.constant(features);
  if (spec_.kind == ModelKind::sheaf_general) {
    const std::size_t d = spec_.stalk_dim;
    const std::size_t f = spec_.channels;
    h = activate(add_row(matmul(h, tape.param(*encoder_w_)), tape.param(*encoder_b_)),
                 spec_.activation);
    if (training && spec_.dropout > 0.0) h = dropout(h, spec_.dropout, rng);
    h = reshape(h, n * d, f);
    for (auto& layer : layers_) h = layer->forward(tape, ctx, h, training, rng);
    h = reshape(h, n, d * f);
  } else {
    for (auto& layer : layers_) h = layer->forward(tape, ctx, h, training, rng);
  }
  return add_row(matmul(h, tape.param(*readout_w_)), tape.param(*readout_b_));
}

std::vector<Param*> Model::params() {
  std::vector<Param*> out;
  if (encoder_w_) {
    out.push_back(encoder_w_.get());
    out.push_back(encoder_b_.get());
  }
  for (auto& layer : layers_)
    for (Param* p : layer->params()) out.push_back(p);
  out.push_back(readout_w_.get());
  out.push_back(readout_b_.get());
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t total = 0;
  for (Param* p : const_cast<Model*>(this)->params()) total += p->value.size();
  return total;
}

std::vector<Matrix*> Model::state_slots() {
  std::vector<Matrix*> slots;
  for (Param* p : params()) slots.push_back(&p->value);
  for (auto& layer : layers_)
    for (Matrix* b : layer->buffers()) slots.push_back(b);
  return slots;
}

Model::State Model::snapshot() {
  State s;
  for (Matrix* m : state_slots()) s.values.push_back(*m);
  return s;
}

void Model::restore(const State& state) {
  auto slots = state_slots();
  if (slots.size() != state.values.size()) throw ContractError("Model::restore: state mismatch");
  for (std::size_t i = 0; i < slots.size(); ++i) *slots[i] = state.values[i];
}

}  // namespace sheafnn::nn
