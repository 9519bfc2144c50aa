#include "sheafnn/layers.hpp"

#include <cmath>

#include "sheafnn/errors.hpp"
#include "sheafnn/linalg.hpp"

namespace sheafnn::nn {

GraphContext::GraphContext(const Graph& g)
    : graph(g),
      laplacian(degree_matrix(g) - adjacency(g)),
      gcn_propagation(g.num_nodes(), g.num_nodes()),
      mean_aggregation(g.num_nodes(), g.num_nodes()) {
  const std::size_t n = g.num_nodes();
  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t v = 0; v < n; ++v) {
    inv_sqrt_deg[v] = 1.0 / std::sqrt(static_cast<double>(degree(g, v)) + 1.0);
  }
  for (std::size_t v = 0; v < n; ++v) {
    gcn_propagation(v, v) = inv_sqrt_deg[v] * inv_sqrt_deg[v];
    const auto& nbrs = g.neighbors(v);
    for (std::size_t u : nbrs) {
      gcn_propagation(v, u) = inv_sqrt_deg[v] * inv_sqrt_deg[u];
      mean_aggregation(v, u) = 1.0 / static_cast<double>(nbrs.size());
    }
  }
  edge_u.reserve(g.num_edges());
  edge_v.reserve(g.num_edges());
  for (const Edge& e : g.edges()) {
    edge_u.push_back(e.u);
    edge_v.push_back(e.v);
    attention_src.push_back(e.u);
    attention_dst.push_back(e.v);
    attention_src.push_back(e.v);
    attention_dst.push_back(e.u);
  }
  for (std::size_t v = 0; v < n; ++v) {
    attention_src.push_back(v);
    attention_dst.push_back(v);
  }
}

void LayerSpec::validate() const {
  if (in_dim == 0 || out_dim == 0) throw ContractError("LayerSpec: dimensions must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw ContractError("LayerSpec: dropout must lie in [0, 1)");
  if (kind == ConvKind::gat && (heads == 0 || out_dim % heads != 0)) {
    throw ContractError("LayerSpec: hidden_dim must be divisible by heads (" +
                        std::to_string(out_dim) + " % " + std::to_string(heads) + ")");
  }
  if (kind == ConvKind::sheaf_general && stalk_dim == 0) {
    throw ContractError("LayerSpec: stalk dimension must be positive");
  }
}

Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng, double gain) {
  const double limit = gain * std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (double& x : m.data()) x = uniform(rng, -limit, limit);
  return m;
}

Var simple_laplacian_conv(const GraphContext& ctx, Var h, Var w) {
  Tape& t = *h.tape();
  if (h.rows() != ctx.graph.num_nodes()) {
    throw ShapeError("simple_laplacian_conv: " + shape_of(h.value()) + " features for " +
                     std::to_string(ctx.graph.num_nodes()) + " nodes");
  }
  return matmul(matmul(t.constant(ctx.laplacian), h), w);
}

Var gcn_conv(const GraphContext& ctx, Var h, Var w, Var bias) {
  Tape& t = *h.tape();
  if (h.rows() != ctx.graph.num_nodes()) throw ShapeError("gcn_conv: feature rows != node count");
  return add_row(matmul(t.constant(ctx.gcn_propagation), matmul(h, w)), bias);
}

Var sage_conv(const GraphContext& ctx, Var h, Var w, Var bias) {
  Tape& t = *h.tape();
  if (h.rows() != ctx.graph.num_nodes()) throw ShapeError("sage_conv: feature rows != node count");
  Var agg = matmul(t.constant(ctx.mean_aggregation), h);
  return row_l2_normalize(add_row(matmul(concat_cols(h, agg), w), bias));
}

Var gat_conv(const GraphContext& ctx, Var h, Var w, Var att_src, Var att_dst, Var bias,
             std::size_t heads, Matrix* attention_out) {
  const std::size_t n = ctx.graph.num_nodes();
  if (h.rows() != n) throw ShapeError("gat_conv: feature rows != node count");
  if (heads == 0 || w.cols() % heads != 0) {
    throw ContractError("gat_conv: hidden_dim must be divisible by heads");
  }
  Var wh = matmul(h, w);
  Var s_src = head_dot(wh, att_src, heads);
  Var s_dst = head_dot(wh, att_dst, heads);
  Var logits = leaky_relu(add(gather_rows(s_src, ctx.attention_src),
                              gather_rows(s_dst, ctx.attention_dst)),
                          0.2);
  Var alpha = segment_softmax(logits, ctx.attention_dst, n);
  if (attention_out != nullptr) *attention_out = alpha.value();
  Var messages = head_scale(gather_rows(wh, ctx.attention_src), alpha, heads);
  return add_row(scatter_add_rows(messages, ctx.attention_dst, n), bias);
}

RestrictionMaps restriction_maps(const GraphContext& ctx, Var h_flat, Var gen_w, Var gen_b) {
  if (h_flat.rows() != ctx.graph.num_nodes()) {
    throw ShapeError("restriction_maps: feature rows != node count");
  }
  if (gen_w.rows() != 2 * h_flat.cols()) {
    throw ShapeError("restriction_maps: generator " + shape_of(gen_w.value()) + " for features " +
                     shape_of(h_flat.value()));
  }
  // [x_self ‖ x_other]·G = x_self·G_top + x_other·G_bottom; projecting per
  // node before gathering keeps the cost proportional to |V| rather than |E|.
  const std::size_t width = h_flat.cols();
  Var self_part = matmul(h_flat, slice_rows(gen_w, 0, width));
  Var other_part = matmul(h_flat, slice_rows(gen_w, width, width));
  return {add_row(add(gather_rows(self_part, ctx.edge_u), gather_rows(other_part, ctx.edge_v)), gen_b),
          add_row(add(gather_rows(self_part, ctx.edge_v), gather_rows(other_part, ctx.edge_u)), gen_b)};
}

CellularSheaf learn_restriction_maps(const Matrix& gen_w, const Matrix& gen_b, const Graph& g,
                                     const Matrix& h, std::size_t stalk_dim) {
  const std::size_t n = g.num_nodes();
  if (stalk_dim == 0 || h.rows() != n * stalk_dim) {
    throw ShapeError("learn_restriction_maps: features " + shape_of(h) + " for " +
                     std::to_string(n) + " nodes of stalk dimension " + std::to_string(stalk_dim));
  }
  const Matrix flat = h.reshaped(n, h.size() / std::max<std::size_t>(n, 1));
  const std::size_t width = flat.cols();
  const std::size_t d2 = stalk_dim * stalk_dim;
  if (gen_w.rows() != 2 * width || gen_w.cols() != d2 || gen_b.rows() != 1 || gen_b.cols() != d2) {
    throw ShapeError("learn_restriction_maps: generator " + shape_of(gen_w) + " / " +
                     shape_of(gen_b) + " incompatible with features");
  }
  auto make_map = [&](std::size_t self, std::size_t other) {
    Matrix input(1, 2 * width);
    for (std::size_t j = 0; j < width; ++j) {
      input(0, j) = flat(self, j);
      input(0, width + j) = flat(other, j);
    }
    return (matmul(input, gen_w) + gen_b).reshaped(stalk_dim, stalk_dim);
  };
  std::vector<Matrix> u_maps, v_maps;
  for (const Edge& e : g.edges()) {
    u_maps.push_back(make_map(e.u, e.v));
    v_maps.push_back(make_map(e.v, e.u));
  }
  return CellularSheaf(g, stalk_dim, std::move(u_maps), std::move(v_maps));
}

Var sheaf_diffusion(const GraphContext& ctx, const RestrictionMaps& maps, Var y,
                    std::size_t stalk_dim, bool normalized, double eps) {
  const std::size_t n = ctx.graph.num_nodes();
  const std::size_t d = stalk_dim;
  if (y.rows() != n * d) {
    throw ShapeError("sheaf_diffusion: input " + shape_of(y.value()) + " for " + std::to_string(n) +
                     " nodes of stalk dimension " + std::to_string(d));
  }
  const std::size_t f = y.cols();
  Var yf = reshape(y, n, d * f);

  Var inv_sqrt_degree;
  if (normalized) {
    Var degree_blocks = add(scatter_add_rows(batched_gram(maps.u_side), ctx.edge_u, n),
                            scatter_add_rows(batched_gram(maps.v_side), ctx.edge_v, n));
    inv_sqrt_degree = batched_inv_sqrt_psd(degree_blocks, eps);
    yf = batched_matmul(inv_sqrt_degree, yf);
  }
  // δy on every edge, then δᵀ back onto the nodes.
  Var edge_diff = sub(batched_matmul(maps.u_side, gather_rows(yf, ctx.edge_u)),
                      batched_matmul(maps.v_side, gather_rows(yf, ctx.edge_v)));
  Var lap = sub(scatter_add_rows(batched_matmul(maps.u_side, edge_diff, true), ctx.edge_u, n),
                scatter_add_rows(batched_matmul(maps.v_side, edge_diff, true), ctx.edge_v, n));
  if (normalized) lap = batched_matmul(inv_sqrt_degree, lap);
  return reshape(lap, n * d, f);
}

BatchThenLayerNorm::BatchThenLayerNorm(const std::string& prefix, std::size_t width)
    : bn_scale_(std::make_unique<Param>(prefix + ".bn_scale", Matrix(1, width, 1.0))),
      bn_shift_(std::make_unique<Param>(prefix + ".bn_shift", Matrix(1, width))),
      ln_scale_(std::make_unique<Param>(prefix + ".ln_scale", Matrix(1, width, 1.0))),
      ln_shift_(std::make_unique<Param>(prefix + ".ln_shift", Matrix(1, width))),
      running_mean_(1, width),
      running_var_(1, width, 1.0) {}

Var BatchThenLayerNorm::forward(Tape& tape, Var h, bool training) {
  Var y;
  if (training) {
    Matrix mean, var;
    y = column_standardize(h, kEps, &mean, &var);
    const double n = static_cast<double>(h.rows());
    const double unbiased = n > 1.0 ? n / (n - 1.0) : 1.0;
    for (std::size_t j = 0; j < mean.cols(); ++j) {
      running_mean_(0, j) = (1.0 - kMomentum) * running_mean_(0, j) + kMomentum * mean(0, j);
      running_var_(0, j) = (1.0 - kMomentum) * running_var_(0, j) + kMomentum * var(0, j) * unbiased;
    }
  } else {
    y = column_standardize_with(h, running_mean_, running_var_, kEps);
  }
  y = add_row(mul_row(y, tape.param(*bn_scale_)), tape.param(*bn_shift_));
  Var z = row_standardize(y, kEps);
  return add_row(mul_row(z, tape.param(*ln_scale_)), tape.param(*ln_shift_));
}

std::vector<Param*> BatchThenLayerNorm::params() {
  return {bn_scale_.get(), bn_shift_.get(), ln_scale_.get(), ln_shift_.get()};
}

std::vector<Matrix*> BatchThenLayerNorm::buffers() { return {&running_mean_, &running_var_}; }

Layer::Layer(LayerSpec spec, std::string prefix) : spec_(spec), prefix_(std::move(prefix)) {
  spec_.validate();
}

Param& Layer::param(std::string_view role) {
  const std::string name = prefix_ + "." + std::string(role);
  for (Param* p : params())
    if (p->name == name) return *p;
  throw ContractError("Layer: no parameter named " + name);
}

Var Layer::finish(Tape& tape, Var conv, Var h, Param* skip, BatchThenLayerNorm* norm,
                  bool training, Rng& rng) {
  Var out = conv;
  if (norm != nullptr) out = norm->forward(tape, out, training);
  if (spec_.alpha != 0.0) {
    Var residual = skip != nullptr ? matmul(h, tape.param(*skip)) : h;
    out = add(out, scale(residual, spec_.alpha));
  }
  out = activate(out, spec_.activation);
  if (training && spec_.dropout > 0.0) out = dropout(out, spec_.dropout, rng);
  return out;
}

GnnLayer::GnnLayer(LayerSpec spec, std::string prefix, Rng& rng)
    : Layer(spec, std::move(prefix)) {
  const std::size_t in = spec_.in_dim;
  const std::size_t out = spec_.out_dim;
  switch (spec_.kind) {
    case ConvKind::gcn:
    case ConvKind::laplacian:
      weight_ = std::make_unique<Param>(prefix_ + ".weight", glorot_uniform(in, out, rng));
      break;
    case ConvKind::sage:
      weight_ = std::make_unique<Param>(prefix_ + ".weight", glorot_uniform(2 * in, out, rng));
      break;
    case ConvKind::gat: {
      weight_ = std::make_unique<Param>(prefix_ + ".weight", glorot_uniform(in, out, rng));
      const std::size_t width = out / spec_.heads;
      const double limit = std::sqrt(6.0 / static_cast<double>(spec_.heads + width));
      Matrix a(1, out), b(1, out);
      for (double& x : a.data()) x = uniform(rng, -limit, limit);
      for (double& x : b.data()) x = uniform(rng, -limit, limit);
      att_src_ = std::make_unique<Param>(prefix_ + ".att_src", std::move(a));
      att_dst_ = std::make_unique<Param>(prefix_ + ".att_dst", std::move(b));
      break;
    }
    case ConvKind::sheaf_general:
      throw ContractError("GnnLayer: sheaf layers are built by SheafLayer");
  }
  if (spec_.kind != ConvKind::laplacian) {
    bias_ = std::make_unique<Param>(prefix_ + ".bias", Matrix(1, out));
  }
  if (spec_.alpha != 0.0 && in != out) {
    skip_ = std::make_unique<Param>(prefix_ + ".skip", glorot_uniform(in, out, rng));
  }
  if (spec_.normalization == Normalization::batch_then_layer) {
    norm_ = std::make_unique<BatchThenLayerNorm>(prefix_ + ".norm", out);
  }
}

Var GnnLayer::forward(Tape& tape, const GraphContext& ctx, Var h, bool training, Rng& rng) {
  if (h.cols() != spec_.in_dim) {
    throw ShapeError("GnnLayer " + prefix_ + ": input has " + std::to_string(h.cols()) +
                     " columns, expected " + std::to_string(spec_.in_dim));
  }
  Var w = tape.param(*weight_);
  Var conv;
  switch (spec_.kind) {
    case ConvKind::gcn:
      conv = gcn_conv(ctx, h, w, tape.param(*bias_));
      break;
    case ConvKind::sage:
      conv = sage_conv(ctx, h, w, tape.param(*bias_));
      break;
    case ConvKind::gat:
      conv = gat_conv(ctx, h, w, tape.param(*att_src_), tape.param(*att_dst_),
                      tape.param(*bias_), spec_.heads);
      break;
    case ConvKind::laplacian:
      conv = simple_laplacian_conv(ctx, h, w);
      break;
    case ConvKind::sheaf_general:
      throw ContractError("GnnLayer: unsupported kind");
  }
  return finish(tape, conv, h, skip_.get(), norm_.get(), training, rng);
}

std::vector<Param*> GnnLayer::params() {
  std::vector<Param*> out;
  for (auto* p : {weight_.get(), bias_.get(), att_src_.get(), att_dst_.get(), skip_.get()})
    if (p != nullptr) out.push_back(p);
  if (norm_) {
    for (Param* p : norm_->params()) out.push_back(p);
  }
  return out;
}

std::vector<Matrix*> GnnLayer::buffers() {
  return norm_ ? norm_->buffers() : std::vector<Matrix*>{};
}

SheafLayer::SheafLayer(LayerSpec spec, std::string prefix, Rng& rng, double generator_scale)
    : Layer(spec, std::move(prefix)) {
  if (spec_.kind != ConvKind::sheaf_general) throw ContractError("SheafLayer: kind must be sheaf_general");
  const std::size_t d = spec_.stalk_dim;
  const std::size_t f_in = spec_.in_dim;
  const std::size_t f_out = spec_.out_dim;
  gen_w_ = std::make_unique<Param>(prefix_ + ".gen_weight",
                                   glorot_uniform(2 * d * f_in, d * d, rng, generator_scale));
  gen_b_ = std::make_unique<Param>(prefix_ + ".gen_bias", Matrix(1, d * d));
  w1_ = std::make_unique<Param>(prefix_ + ".w1", glorot_uniform(d, d, rng));
  w2_ = std::make_unique<Param>(prefix_ + ".w2", glorot_uniform(f_in, f_out, rng));
  if (spec_.alpha != 0.0 && f_in != f_out) {
    w3_ = std::make_unique<Param>(prefix_ + ".w3", glorot_uniform(f_in, f_out, rng));
  }
  if (spec_.normalization == Normalization::batch_then_layer) {
    norm_ = std::make_unique<BatchThenLayerNorm>(prefix_ + ".norm", f_out);
  }
}

Var SheafLayer::forward(Tape& tape, const GraphContext& ctx, Var h, bool training, Rng& rng) {
  const std::size_t n = ctx.graph.num_nodes();
  const std::size_t d = spec_.stalk_dim;
  if (h.rows() != n * d || h.cols() != spec_.in_dim) {
    throw ShapeError("SheafLayer " + prefix_ + ": input " + shape_of(h.value()) + ", expected " +
                     std::to_string(n * d) + "x" + std::to_string(spec_.in_dim));
  }
  Var flat = reshape(h, n, d * spec_.in_dim);
  const RestrictionMaps maps =
      restriction_maps(ctx, flat, tape.param(*gen_w_), tape.param(*gen_b_));
  Var mixed = block_left_matmul(tape.param(*w1_), h);
  Var diffused =
      sheaf_diffusion(ctx, maps, mixed, d, spec_.normalized_laplacian, spec_.laplacian_eps);
  Var conv = matmul(diffused, tape.param(*w2_));
  return finish(tape, conv, h, w3_.get(), norm_.get(), training, rng);
}

std::vector<Param*> SheafLayer::params() {
  std::vector<Param*> out;
  for (auto* p : {gen_w_.get(), gen_b_.get(), w1_.get(), w2_.get(), w3_.get()})
    if (p != nullptr) out.push_back(p);
  if (norm_) {
    for (Param* p : norm_->params()) out.push_back(p);
  }
  return out;
}

std::vector<Matrix*> SheafLayer::buffers() {
  return norm_ ? norm_->buffers() : std::vector<Matrix*>{};
}

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, const std::string& prefix, Rng& rng) {
  if (spec.kind == ConvKind::sheaf_general) return std::make_unique<SheafLayer>(spec, prefix, rng);
  return std::make_unique<GnnLayer>(spec, prefix, rng);
}

}  // namespace sheafnn::nn
