#pragma once

#include <cstddef>
#include <optional>
#include <unordered_set>
#include <vector>

#include "sheafnn/matrix.hpp"

namespace sheafnn {

/// Undirected edge stored in canonical orientation u < v.
struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Simple undirected graph. Edges keep their insertion order, which the
/// similarity-graph builder relies on.
class Graph {
 public:
  explicit Graph(std::size_t num_nodes = 0);
  /// Endpoints are canonicalized to (min, max). Self-loops and duplicates
  /// throw ContractError.
  Graph(std::size_t num_nodes, const std::vector<Edge>& edges);

  /// Returns the index of the new edge.
  std::size_t add_edge(std::size_t a, std::size_t b);
  bool has_edge(std::size_t a, std::size_t b) const;

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<std::size_t>& neighbors(std::size_t v) const;

 private:
  std::size_t num_nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::unordered_set<std::size_t> keys_;
};

std::size_t degree(const Graph& g, std::size_t v);
std::size_t count_components(const Graph& g);
bool is_connected(const Graph& g);

Matrix adjacency(const Graph& g);
Matrix degree_matrix(const Graph& g);

/// Ranks every node pair by cosine similarity of feature rows (descending,
/// ties by (u, v) ascending) and inserts edges in that order until the graph
/// is connected. Zero-norm rows throw ContractError.
Graph build_similarity_graph(const Matrix& features);

/// Cosine similarity between rows i and j.
double cosine_similarity(const Matrix& features, std::size_t i, std::size_t j);

/// Graph with node features and optional binary labels.
struct FeaturedGraph {
  FeaturedGraph(Graph graph, Matrix features, std::optional<std::vector<int>> labels = {});

  Graph graph;
  Matrix features;
  std::optional<std::vector<int>> labels;
};

}  // namespace sheafnn
