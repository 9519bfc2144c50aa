#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sheafnn/errors.hpp"
#include "sheafnn/graph.hpp"
#include "sheafnn/linalg.hpp"

using namespace sheafnn;

TEST(Graph, CanonicalizesEdges) {
  Graph g(3);
  EXPECT_EQ(g.add_edge(2, 0), 0u);
  EXPECT_EQ(g.edges()[0], (Edge{0, 2}));
  EXPECT_TRUE(g.has_edge(0, 2));
  EXPECT_TRUE(g.has_edge(2, 0));
  EXPECT_FALSE(g.has_edge(0, 1));
  EXPECT_EQ(degree(g, 0), 1u);
  EXPECT_EQ(degree(g, 1), 0u);
}

TEST(Graph, RejectsInvalidEdges) {
  Graph g(3);
  g.add_edge(0, 1);
  EXPECT_THROW(g.add_edge(1, 0), ContractError);
  EXPECT_THROW(g.add_edge(1, 1), ContractError);
  EXPECT_THROW(g.add_edge(0, 3), ContractError);
  EXPECT_THROW(g.neighbors(5), ContractError);
  EXPECT_THROW(Graph(2, {{0, 1}, {1, 0}}), ContractError);
}

TEST(Graph, ComponentsMatchUnionFindOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const Graph g = oracle::random_graph(1 + uniform_index(rng, 15), 0.15, rng);
    EXPECT_EQ(count_components(g), oracle::components(g));
    EXPECT_EQ(is_connected(g), oracle::components(g) == 1);
  }
  EXPECT_THROW(is_connected(Graph(0)), ContractError);
}

TEST(Graph, AdjacencyAndDegree) {
  const Graph g(3, {{0, 1}, {1, 2}});
  EXPECT_EQ(adjacency(g), (Matrix{{0, 1, 0}, {1, 0, 1}, {0, 1, 0}}));
  EXPECT_EQ(degree_matrix(g), (Matrix{{1, 0, 0}, {0, 2, 0}, {0, 0, 1}}));
}

TEST(SimilarityGraph, IsConnectedAndMinimalInRankOrder) {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 20);
    const Matrix x = oracle::random_matrix(n, 4, rng);
    const Graph g = build_similarity_graph(x);
    ASSERT_TRUE(is_connected(g));
    // Edges appear in non-increasing similarity, and removing the last one
    // disconnects the graph.
    for (std::size_t e = 1; e < g.num_edges(); ++e) {
      const Edge a = g.edges()[e - 1], b = g.edges()[e];
      EXPECT_GE(cosine_similarity(x, a.u, a.v), cosine_similarity(x, b.u, b.v));
    }
    std::vector<Edge> prefix(g.edges().begin(), g.edges().end() - 1);
    EXPECT_GT(oracle::components(Graph(n, prefix)), 1u);
    // Every pair more similar than the last inserted edge is present.
    const Edge last = g.edges().back();
    const double cut = cosine_similarity(x, last.u, last.v);
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = u + 1; v < n; ++v)
        if (cosine_similarity(x, u, v) > cut) EXPECT_TRUE(g.has_edge(u, v));
  }
}

TEST(SimilarityGraph, HandExample) {
  // Rows 0 and 1 are parallel, row 2 is closer to row 1 than to row 0.
  const Matrix x{{1, 0}, {2, 0}, {1, 1}};
  const Graph g = build_similarity_graph(x);
  ASSERT_EQ(g.num_edges(), 2u);
  EXPECT_EQ(g.edges()[0], (Edge{0, 1}));
  // Ties between (0,2) and (1,2) break towards the smaller u.
  EXPECT_EQ(g.edges()[1], (Edge{0, 2}));
}

TEST(SimilarityGraph, RejectsDegenerateInput) {
  EXPECT_THROW(build_similarity_graph(Matrix{{1, 0}}), ContractError);
  EXPECT_THROW(build_similarity_graph(Matrix{{1, 0}, {0, 0}}), ContractError);
}

TEST(FeaturedGraph, Validates) {
  const Graph g(2, {{0, 1}});
  EXPECT_NO_THROW(FeaturedGraph(g, Matrix(2, 3), std::vector<int>{0, 1}));
  EXPECT_THROW(FeaturedGraph(g, Matrix(3, 3)), ShapeError);
  EXPECT_THROW(FeaturedGraph(g, Matrix(2, 3), std::vector<int>{0}), ShapeError);
  EXPECT_THROW(FeaturedGraph(g, Matrix(2, 3), std::vector<int>{0, 2}), ValidationError);
}
