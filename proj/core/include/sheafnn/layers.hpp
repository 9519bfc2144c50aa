#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "sheafnn/graph.hpp"
#include "sheafnn/ops.hpp"
#include "sheafnn/random.hpp"
#include "sheafnn/sheaf.hpp"
#include "sheafnn/tape.hpp"

namespace sheafnn::nn {

enum class ConvKind { gcn, sage, gat, laplacian, sheaf_general };
enum class Normalization { none, batch_then_layer };

/// Per-graph constants shared by every layer; build once per fold.
struct GraphContext {
  explicit GraphContext(const Graph& g);

  Graph graph;
  Matrix laplacian;         // D − A
  Matrix gcn_propagation;   // D̃^{-1/2} (A + I) D̃^{-1/2}
  Matrix mean_aggregation;  // row v averages the features of N(v)
  std::vector<std::size_t> edge_u;  // canonical endpoints, edge order
  std::vector<std::size_t> edge_v;
  std::vector<std::size_t> attention_src;  // directed pairs plus self-loops
  std::vector<std::size_t> attention_dst;
};

struct LayerSpec {
  ConvKind kind = ConvKind::gcn;
  std::size_t in_dim = 0;   // channels f_i for sheaf layers
  std::size_t out_dim = 0;  // channels f_{i+1} for sheaf layers
  double alpha = 0.0;
  Activation activation = Activation::identity;
  double dropout = 0.0;
  Normalization normalization = Normalization::none;
  std::size_t heads = 1;      // gat
  std::size_t stalk_dim = 1;  // sheaf
  bool normalized_laplacian = true;  // sheaf
  double laplacian_eps = 1e-6;       // sheaf

  /// Throws ContractError on inconsistent dimensions.
  void validate() const;
};

// Graph convolutions. Each takes node features h (n×in) and returns n×out.

/// (D − A)·h·W.
Var simple_laplacian_conv(const GraphContext& ctx, Var h, Var w);
/// Â·h·W + b with Â the self-loop-augmented symmetric normalization.
Var gcn_conv(const GraphContext& ctx, Var h, Var w, Var bias);
/// L2-row-normalized [h ‖ mean_{N(v)} h]·W + b; W is (2·in)×out.
Var sage_conv(const GraphContext& ctx, Var h, Var w, Var bias);
/// Multi-head attention aggregation over N(v) ∪ {v}; heads concatenated.
/// `attention_out`, when given, receives the |pairs|×heads coefficients.
Var gat_conv(const GraphContext& ctx, Var h, Var w, Var att_src, Var att_dst, Var bias,
             std::size_t heads, Matrix* attention_out = nullptr);

/// Per-edge restriction maps, one row-major d×d map per row.
struct RestrictionMaps {
  Var u_side;  // F_{u≤e}
  Var v_side;  // F_{v≤e}
};

/// F_{x≤e} = reshape([h_x ‖ h_other]·G + b) for node features flattened to
/// n×(d·f). G is (2·d·f)×d², b is 1×d².
RestrictionMaps restriction_maps(const GraphContext& ctx, Var h_flat, Var gen_w, Var gen_b);

/// Snapshot of the learned sheaf for the given features, for inspection.
CellularSheaf learn_restriction_maps(const Matrix& gen_w, const Matrix& gen_b, const Graph& g,
                                     const Matrix& h, std::size_t stalk_dim);

/// Δ_F·y for y of shape (n·d)×f, with Δ_F the (optionally normalized) sheaf
/// Laplacian of `maps`.
Var sheaf_diffusion(const GraphContext& ctx, const RestrictionMaps& maps, Var y,
                    std::size_t stalk_dim, bool normalized, double eps);

/// Feature-wise batch standardization followed by per-row layer
/// standardization, each with a learned scale and shift.
class BatchThenLayerNorm {
 public:
  BatchThenLayerNorm(const std::string& prefix, std::size_t width);

  Var forward(Tape& tape, Var h, bool training);
  std::vector<Param*> params();
  std::vector<Matrix*> buffers();

  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.1;

 private:
  std::unique_ptr<Param> bn_scale_, bn_shift_, ln_scale_, ln_shift_;
  Matrix running_mean_;
  Matrix running_var_;
};

class Layer {
 public:
  explicit Layer(LayerSpec spec, std::string prefix);
  virtual ~Layer() = default;

  virtual Var forward(Tape& tape, const GraphContext& ctx, Var h, bool training, Rng& rng) = 0;
  virtual std::vector<Param*> params() = 0;
  virtual std::vector<Matrix*> buffers() { return {}; }

  const LayerSpec& spec() const noexcept { return spec_; }
  /// Parameter named "<prefix>.<role>"; throws ContractError if absent.
  Param& param(std::string_view role);

 protected:
  Var finish(Tape& tape, Var conv, Var h, Param* skip, BatchThenLayerNorm* norm, bool training,
             Rng& rng);

  LayerSpec spec_;
  std::string prefix_;
};

/// Generic message-passing layer σ(ψ(GConv(h)) + α·h·W_skip), followed by
/// dropout in training mode. W_skip is the identity when in_dim == out_dim.
class GnnLayer final : public Layer {
 public:
  GnnLayer(LayerSpec spec, std::string prefix, Rng& rng);

  Var forward(Tape& tape, const GraphContext& ctx, Var h, bool training, Rng& rng) override;
  std::vector<Param*> params() override;
  std::vector<Matrix*> buffers() override;

 private:
  std::unique_ptr<Param> weight_, bias_, att_src_, att_dst_, skip_;
  std::unique_ptr<BatchThenLayerNorm> norm_;
};

/// Sheaf diffusion layer σ(ψ(Δ_F (I⊗W₁) h · W₂) + α·h·W₃) on node blocks of
/// d rows, with the sheaf regenerated from the current features.
class SheafLayer final : public Layer {
 public:
  SheafLayer(LayerSpec spec, std::string prefix, Rng& rng, double generator_scale = 0.1);

  Var forward(Tape& tape, const GraphContext& ctx, Var h, bool training, Rng& rng) override;
  std::vector<Param*> params() override;
  std::vector<Matrix*> buffers() override;

 private:
  std::unique_ptr<Param> gen_w_, gen_b_, w1_, w2_, w3_;
  std::unique_ptr<BatchThenLayerNorm> norm_;
};

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, const std::string& prefix, Rng& rng);

/// Uniform in ±sqrt(6/(rows+cols)), times `gain`.
Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng, double gain = 1.0);

}  // namespace sheafnn::nn
