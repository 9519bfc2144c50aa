#include "sheafnn/selfcheck.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "sheafnn/config.hpp"
#include "sheafnn/data.hpp"
#include "sheafnn/errors.hpp"
#include "sheafnn/folds.hpp"
#include "sheafnn/graph.hpp"
#include "sheafnn/layers.hpp"
#include "sheafnn/linalg.hpp"
#include "sheafnn/metrics.hpp"
#include "sheafnn/model.hpp"
#include "sheafnn/ops.hpp"
#include "sheafnn/optim.hpp"
#include "sheafnn/random.hpp"
#include "sheafnn/sheaf.hpp"
#include "sheafnn/training.hpp"

namespace sheafnn {

namespace {

struct CheckFailed {
  std::string what;
};

void expect(bool cond, const std::string& what) {
  if (!cond) throw CheckFailed{what};
}

Graph random_graph(std::size_t n, double p, Rng& rng) {
  Graph g(n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (uniform01(rng) < p) g.add_edge(u, v);
  return g;
}

Graph random_connected_graph(std::size_t n, Rng& rng) {
  Graph g(n);
  for (std::size_t v = 1; v < n; ++v) g.add_edge(uniform_index(rng, v), v);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (!g.has_edge(u, v) && uniform01(rng) < 0.2) g.add_edge(u, v);
  return g;
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& x : m.data()) x = standard_normal(rng);
  return m;
}

CellularSheaf random_sheaf(const Graph& g, std::size_t d, Rng& rng) {
  std::vector<Matrix> u, v;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    u.push_back(random_matrix(d, d, rng));
    v.push_back(random_matrix(d, d, rng));
  }
  return CellularSheaf(g, d, std::move(u), std::move(v));
}

void check_constant_sheaf() {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Graph g = random_graph(2 + uniform_index(rng, 12), 0.3, rng);
    const Matrix expected = degree_matrix(g) - adjacency(g);
    expect(max_abs_diff(sheaf_laplacian(constant_sheaf(g, 1)), expected) == 0.0, "L_F != D - A");
  }
}

void check_psd_and_kernel() {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Graph g = random_graph(2 + uniform_index(rng, 7), 0.35, rng);
    const std::size_t d = 1 + uniform_index(rng, 3);
    const SymEig eig = sym_eig(sheaf_laplacian(random_sheaf(g, d, rng)));
    expect(eig.values.front() >= -1e-10, "negative eigenvalue " + std::to_string(eig.values.front()));
    const Matrix kernel = global_sections(constant_sheaf(g, d));
    expect(kernel.cols() == d * count_components(g), "constant-sheaf kernel dimension");
  }
}

void check_orientation() {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Graph g = random_connected_graph(3 + uniform_index(rng, 6), rng);
    const std::size_t d = 1 + uniform_index(rng, 3);
    Matrix delta = coboundary(random_sheaf(g, d, rng));
    const Matrix before = matmul_tn(delta, delta);
    for (std::size_t e = 0; e < g.num_edges(); ++e)
      if (uniform01(rng) < 0.5)
        for (std::size_t r = e * d; r < (e + 1) * d; ++r)
          for (double& x : delta.row(r)) x = -x;
    expect(max_abs_diff(matmul_tn(delta, delta), before) < 1e-12, "edge flip changed L_F");
  }
}

void check_degeneration() {
  Rng rng(14);
  for (int trial = 0; trial < 5; ++trial) {
    const Graph g = random_connected_graph(3 + uniform_index(rng, 6), rng);
    const nn::GraphContext ctx(g);
    const std::size_t f = 1 + uniform_index(rng, 4);
    nn::LayerSpec spec;
    spec.kind = nn::ConvKind::sheaf_general;
    spec.in_dim = f;
    spec.out_dim = f;
    spec.stalk_dim = 1;
    spec.normalized_laplacian = false;
    nn::SheafLayer layer(spec, "s", rng);
    layer.param("gen_weight").value.fill(0.0);
    layer.param("gen_bias").value.fill(1.0);
    layer.param("w1").value.fill(1.0);
    const Matrix h = random_matrix(g.num_nodes(), f, rng);
    nn::Tape tape;
    const nn::Var out = layer.forward(tape, ctx, tape.constant(h), false, rng);
    const nn::Var ref = nn::simple_laplacian_conv(ctx, tape.constant(h), tape.constant(layer.param("w2").value));
    expect(max_abs_diff(out.value(), ref.value()) < 1e-10, "sheaf layer differs from Laplacian layer");
  }
}

double model_loss(nn::Model& model, const nn::GraphContext& ctx, const Matrix& x, const std::vector<double>& y,
                  const std::vector<std::size_t>& rows, Rng& rng) {
  nn::Tape tape;
  return nn::bce_with_logits(model.forward(tape, ctx, x, true, rng), y, rows).value()(0, 0);
}

void check_gradients() {
  Rng rng(15);
  for (auto kind : {nn::ModelKind::gcn, nn::ModelKind::sage, nn::ModelKind::gat, nn::ModelKind::sheaf_general}) {
    const Graph g = random_connected_graph(6, rng);
    const nn::GraphContext ctx(g);
    nn::ModelSpec spec = nn::default_model_spec(kind, 3);
    spec.hidden_dim = 4;
    spec.stalk_dim = 2;
    spec.channels = 3;
    spec.activation = nn::Activation::elu;
    spec.dropout = 0.0;
    nn::Model model(spec, rng);
    const Matrix x = random_matrix(6, 3, rng);
    std::vector<double> y;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < 6; ++i) {
      y.push_back(static_cast<double>(i % 2));
      rows.push_back(i);
    }
    {
      nn::Tape tape;
      tape.backward(nn::bce_with_logits(model.forward(tape, ctx, x, true, rng), y, rows));
    }
    for (nn::Param* p : model.params()) {
      for (std::size_t k = 0; k < p->value.size(); ++k) {
        double& w = p->value.data()[k];
        const double saved = w;
        const double h = 1e-5;
        w = saved + h;
        const double lp = model_loss(model, ctx, x, y, rows, rng);
        w = saved - h;
        const double lm = model_loss(model, ctx, x, y, rows, rng);
        w = saved;
        const double numeric = (lp - lm) / (2 * h);
        const double analytic = p->grad.data()[k];
        const double err = std::abs(numeric - analytic);
        expect(err <= 1e-7 || err <= 1e-4 * std::max(std::abs(numeric), std::abs(analytic)),
               p->name + " gradient mismatch (" + pipeline::to_string(kind) + ")");
      }
    }
  }
}

void check_optimizer() {
  nn::Param p("p", Matrix{{1.0}});
  p.grad = Matrix{{1.0}};
  optim::Adam adam({&p}, {.lr = 0.1});
  adam.step();
  expect(std::abs(p.value(0, 0) - 0.9) < 1e-6, "first Adam step");
  nn::Param q("q", Matrix{{3.0, 4.0}});
  q.grad = Matrix{{3.0, 4.0}};
  nn::Param* qs[] = {&q};
  optim::clip_gradients(qs, 1.0);
  expect(std::abs(q.grad(0, 0) - 0.6) < 1e-12 && std::abs(q.grad(0, 1) - 0.8) < 1e-12, "clipping");
  optim::PlateauScheduler sched(1.0, 0.5, 2);
  for (int e = 1; e <= 3; ++e) expect(sched.step(1.0) == 1.0, "scheduler reduced early");
  expect(sched.step(1.0) == 0.5, "scheduler did not reduce at the 4th flat epoch");
  optim::EarlyStopper stop(80, 200);
  bool fired_at = false;
  for (std::size_t e = 1; e <= 400; ++e) {
    if (stop.check(e, e <= 200 ? static_cast<double>(e) : 200.0)) {
      fired_at = e == 281;
      break;
    }
  }
  expect(fired_at, "early stopper did not fire at epoch 281");
}

void check_metrics() {
  const auto [lo, hi] = pipeline::wilson_ci(221, 224);
  expect(std::abs(lo - 0.961) <= 1e-3 && std::abs(hi - 0.995) <= 1e-3, "wilson_ci(221, 224)");
  const auto [lo2, hi2] = pipeline::wilson_ci(208, 224);
  expect(std::abs(lo2 - 0.887) <= 1e-3 && std::abs(hi2 - 0.956) <= 1e-3, "wilson_ci(208, 224)");
  const auto v = pipeline::majority_vote({{1, 1, 1, 0, 0}, {0, 0, 0, 0, 1}}, 5);
  expect(v.labels == std::vector<int>{1, 0} && v.scores == std::vector<double>{0.6, 0.2}, "majority vote");
}

void check_grids() {
  const std::pair<nn::ModelKind, std::size_t> expected[] = {
      {nn::ModelKind::gcn, 972}, {nn::ModelKind::sage, 405}, {nn::ModelKind::gat, 756},
      {nn::ModelKind::sheaf_general, 432}};
  for (const auto& [kind, size] : expected)
    expect(pipeline::standard_grid(kind).size() == size, pipeline::to_string(kind) + " grid size");
}

void check_folds() {
  const auto ds = data::generate_synthetic(224, 147.0 / 224.0, 3);
  const auto plans = pipeline::repeated_stratified_kfold(ds.labels, 10, 5, 3);
  pipeline::check_fold_plans(plans, ds.size(), 10);
  for (const auto& p : plans) {
    std::size_t pos = 0;
    for (std::size_t i : p.test) pos += ds.labels[i];
    expect(pos >= 14 && pos <= 15 && p.test.size() - pos >= 7 && p.test.size() - pos <= 8, "fold class counts");
  }
  // The fitted scaler and PCA must not depend on test rows.
  data::SpectraDataset altered = ds;
  for (std::size_t i : plans[0].test)
    for (double& x : altered.spectra.row(i)) x += 1.0;
  const auto a = pipeline::prepare_fold(ds, plans[0], 20);
  const auto b = pipeline::prepare_fold(altered, plans[0], 20);
  expect(a.pca.components == b.pca.components && a.pca.mean == b.pca.mean && a.pca.scale == b.pca.scale,
         "PCA depends on test rows");
}

}  // namespace

bool run_selfcheck(std::ostream& out) {
  const std::pair<const char*, std::function<void()>> checks[] = {
      {"constant sheaf Laplacian equals D - A", check_constant_sheaf},
      {"sheaf Laplacian PSD, constant-sheaf kernel", check_psd_and_kernel},
      {"orientation invariance", check_orientation},
      {"sheaf layer degenerates to Laplacian layer", check_degeneration},
      {"model gradients match finite differences", check_gradients},
      {"optimizer, clipping, scheduler, early stopping", check_optimizer},
      {"Wilson interval and majority vote", check_metrics},
      {"grid sizes", check_grids},
      {"fold protocol and PCA leakage guard", check_folds},
  };
  bool ok = true;
  for (const auto& [name, fn] : checks) {
    try {
      fn();
      out << "ok    " << name << '\n';
    } catch (const CheckFailed& f) {
      ok = false;
      out << "FAIL  " << name << ": " << f.what << '\n';
    } catch (const std::exception& e) {
      ok = false;
      out << "FAIL  " << name << ": " << e.what() << '\n';
    }
  }
  return ok;
}

}  // namespace sheafnn
