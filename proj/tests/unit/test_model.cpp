#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sheafnn/errors.hpp"
#include "sheafnn/model.hpp"
#include "sheafnn/ops.hpp"

using namespace sheafnn;
using namespace sheafnn::nn;

namespace {

struct Fixture {
  Graph graph;
  GraphContext ctx;
  Matrix x;
  std::vector<double> y;
  std::vector<std::size_t> rows;

  explicit Fixture(std::uint64_t seed, std::size_t n = 7, std::size_t p = 3)
      : graph(make_graph(seed, n)), ctx(graph) {
    Rng rng(seed + 1);
    x = oracle::random_matrix(n, p, rng);
    for (std::size_t i = 0; i < n; ++i) {
      y.push_back(static_cast<double>(i % 2));
      rows.push_back(i);
    }
  }

  static Graph make_graph(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    return oracle::random_connected_graph(n, 0.3, rng);
  }
};

ModelSpec small_spec(ModelKind kind) {
  ModelSpec spec = default_model_spec(kind, 3);
  spec.hidden_dim = 4;
  spec.stalk_dim = 2;
  spec.channels = 3;
  spec.activation = Activation::elu;
  return spec;
}

}  // namespace

TEST(Model, DefaultsPerKind) {
  EXPECT_EQ(default_model_spec(ModelKind::gcn, 5).activation, Activation::relu);
  EXPECT_EQ(default_model_spec(ModelKind::gat, 5).activation, Activation::elu);
  EXPECT_DOUBLE_EQ(default_model_spec(ModelKind::sage, 5).alpha, 0.05);
  EXPECT_EQ(default_model_spec(ModelKind::sheaf_general, 5).in_dim, 5u);
}

TEST(Model, OutputShapeAndParameterCount) {
  Fixture fx(1);
  Rng rng(0);
  ModelSpec spec = small_spec(ModelKind::gcn);
  spec.normalization = Normalization::none;
  Model gcn(spec, rng);
  Tape t;
  const Var out = gcn.forward(t, fx.ctx, fx.x, false, rng);
  EXPECT_EQ(out.rows(), 7u);
  EXPECT_EQ(out.cols(), 1u);
  // layer0: W 3×4 + b 4 + skip 3×4; layer1: W 4×4 + b 4; read-out 4 + 1.
  EXPECT_EQ(gcn.parameter_count(), 12u + 4 + 12 + 16 + 4 + 4 + 1);

  ModelSpec sheaf_spec = small_spec(ModelKind::sheaf_general);
  sheaf_spec.normalization = Normalization::none;
  Model sheaf(sheaf_spec, rng);
  // encoder 3×6 + 6; per layer G 12×4 + b 4 + W1 2×2 + W2 3×3; read-out 6 + 1.
  EXPECT_EQ(sheaf.parameter_count(), 18u + 6 + 2 * (48 + 4 + 4 + 9) + 6 + 1);
}

TEST(Model, GradientsMatchFiniteDifferencesForEveryKind) {
  for (ModelKind kind : {ModelKind::gcn, ModelKind::sage, ModelKind::gat, ModelKind::sheaf_general}) {
    Fixture fx(10 + static_cast<std::uint64_t>(kind));
    Rng init(3);
    Model model(small_spec(kind), init);
    auto loss = [&](bool backprop) {
      Tape t;
      Rng rng(0);
      Var l = bce_with_logits(model.forward(t, fx.ctx, fx.x, true, rng), fx.y, fx.rows);
      if (backprop) t.backward(l);
      return l.value()(0, 0);
    };
    loss(true);
    const auto bad = oracle::check_gradients(model.params(), [&] { return loss(false); });
    for (const auto& m : bad)
      ADD_FAILURE() << static_cast<int>(kind) << " " << m.param << "[" << m.entry << "]: analytic " << m.analytic
                    << " numeric " << m.numeric;
  }
}

TEST(Model, InitializationIsSeeded) {
  Rng a(5), b(5), c(6);
  const Model m1(small_spec(ModelKind::gat), a), m2(small_spec(ModelKind::gat), b), m3(small_spec(ModelKind::gat), c);
  auto values = [](const Model& m) {
    std::vector<Matrix> out;
    for (Param* p : const_cast<Model&>(m).params()) out.push_back(p->value);
    return out;
  };
  EXPECT_EQ(values(m1), values(m2));
  EXPECT_NE(values(m1), values(m3));
}

TEST(Model, SnapshotRestoreRoundTrip) {
  Fixture fx(2);
  Rng rng(0);
  Model model(small_spec(ModelKind::sheaf_general), rng);
  const auto state = model.snapshot();
  Tape t1;
  const Matrix before = model.forward(t1, fx.ctx, fx.x, false, rng).value();
  // A training pass moves the running statistics; parameters get perturbed.
  {
    Tape t;
    model.forward(t, fx.ctx, fx.x, true, rng);
  }
  for (Param* p : model.params()) p->value.fill(0.25);
  model.restore(state);
  Tape t2;
  EXPECT_EQ(model.forward(t2, fx.ctx, fx.x, false, rng).value(), before);
  EXPECT_THROW(model.restore({}), ContractError);
}

TEST(Model, RejectsBadShapes) {
  Rng rng(0);
  ModelSpec spec = small_spec(ModelKind::gcn);
  spec.num_layers = 0;
  EXPECT_THROW(Model(spec, rng), ContractError);
  spec = small_spec(ModelKind::gcn);
  spec.in_dim = 0;
  EXPECT_THROW(Model(spec, rng), ContractError);
  Model model(small_spec(ModelKind::gcn), rng);
  Fixture fx(3);
  Tape t;
  EXPECT_THROW(model.forward(t, fx.ctx, Matrix(7, 2), false, rng), ShapeError);
}

TEST(Model, DropoutOnlyInTraining) {
  Fixture fx(4);
  Rng init(0);
  ModelSpec spec = small_spec(ModelKind::sage);
  spec.dropout = 0.5;
  spec.normalization = Normalization::none;
  Model model(spec, init);
  Rng r1(1), r2(2);
  Tape t;
  EXPECT_EQ(model.forward(t, fx.ctx, fx.x, false, r1).value(), model.forward(t, fx.ctx, fx.x, false, r2).value());
  EXPECT_NE(model.forward(t, fx.ctx, fx.x, true, r1).value(), model.forward(t, fx.ctx, fx.x, true, r2).value());
}
