#include <benchmark/benchmark.h>

#include "sheafnn/data.hpp"
#include "sheafnn/graph.hpp"
#include "sheafnn/layers.hpp"
#include "sheafnn/linalg.hpp"
#include "sheafnn/ops.hpp"
#include "sheafnn/random.hpp"
#include "sheafnn/sheaf.hpp"

using namespace sheafnn;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = standard_normal(rng);
  return m;
}

Graph random_graph(std::size_t n, Rng& rng) {
  Graph g(n);
  for (std::size_t v = 1; v < n; ++v) g.add_edge(uniform_index(rng, v), v);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t u = uniform_index(rng, n), v = uniform_index(rng, n);
    if (u != v && !g.has_edge(u, v)) g.add_edge(u, v);
  }
  return g;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Matrix a = random_matrix(n, n, rng), b = random_matrix(n, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_SymEig(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const Matrix a = random_matrix(n, n, rng);
  const Matrix s = matmul_tn(a, a);
  for (auto _ : state) benchmark::DoNotOptimize(sym_eig(s));
}
BENCHMARK(BM_SymEig)->RangeMultiplier(2)->Range(16, 128);

void BM_SheafLaplacian(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  const CellularSheaf s = constant_sheaf(random_graph(n, rng), 4);
  for (auto _ : state) benchmark::DoNotOptimize(normalized_sheaf_laplacian(s));
}
BENCHMARK(BM_SheafLaplacian)->Arg(16)->Arg(32)->Arg(64);

void BM_SimilarityGraph(benchmark::State& state) {
  Rng rng(4);
  const Matrix x = random_matrix(static_cast<std::size_t>(state.range(0)), 50, rng);
  for (auto _ : state) benchmark::DoNotOptimize(build_similarity_graph(x));
}
BENCHMARK(BM_SimilarityGraph)->Arg(64)->Arg(224);

void BM_SheafLayerStep(benchmark::State& state) {
  const std::size_t n = 224, d = static_cast<std::size_t>(state.range(0)), f = 8;
  Rng rng(5);
  const Graph g = random_graph(n, rng);
  const nn::GraphContext ctx(g);
  nn::LayerSpec spec;
  spec.kind = nn::ConvKind::sheaf_general;
  spec.in_dim = f;
  spec.out_dim = f;
  spec.stalk_dim = d;
  spec.activation = nn::Activation::elu;
  nn::SheafLayer layer(spec, "s", rng);
  const Matrix h = random_matrix(n * d, f, rng);
  for (auto _ : state) {
    nn::Tape t;
    nn::Var out = layer.forward(t, ctx, t.constant(h), true, rng);
    t.backward(nn::sum(out));
  }
}
BENCHMARK(BM_SheafLayerStep)->Arg(2)->Arg(4)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
