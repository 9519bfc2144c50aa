#include "sheafnn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sheafnn/errors.hpp"

namespace sheafnn {
namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), components_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    parent_[std::max(a, b)] = std::min(a, b);
    --components_;
  }

  std::size_t components() const noexcept { return components_; }

 private:
  std::vector<std::size_t> parent_;
  std::size_t components_;
};

}  // namespace

Graph::Graph(std::size_t num_nodes) : num_nodes_(num_nodes), adjacency_(num_nodes) {}

Graph::Graph(std::size_t num_nodes, const std::vector<Edge>& edges) : Graph(num_nodes) {
  for (const Edge& e : edges) add_edge(e.u, e.v);
}

std::size_t Graph::add_edge(std::size_t a, std::size_t b) {
  if (a >= num_nodes_ || b >= num_nodes_) {
    throw ContractError("add_edge: node out of range (" + std::to_string(a) + "," +
                        std::to_string(b) + ") with " + std::to_string(num_nodes_) + " nodes");
  }
  if (a == b) throw ContractError("add_edge: self-loop at node " + std::to_string(a));
  const std::size_t u = std::min(a, b);
  const std::size_t v = std::max(a, b);
  if (!keys_.insert(u * num_nodes_ + v).second) {
    throw ContractError("add_edge: duplicate edge (" + std::to_string(u) + "," +
                        std::to_string(v) + ")");
  }
  edges_.push_back({u, v});
  adjacency_[u].push_back(v);
  adjacency_[v].push_back(u);
  return edges_.size() - 1;
}

bool Graph::has_edge(std::size_t a, std::size_t b) const {
  if (a >= num_nodes_ || b >= num_nodes_ || a == b) return false;
  return keys_.contains(std::min(a, b) * num_nodes_ + std::max(a, b));
}

const std::vector<std::size_t>& Graph::neighbors(std::size_t v) const {
  if (v >= num_nodes_) {
    throw ContractError("neighbors: node " + std::to_string(v) + " out of range");
  }
  return adjacency_[v];
}

std::size_t degree(const Graph& g, std::size_t v) { return g.neighbors(v).size(); }

std::size_t count_components(const Graph& g) {
  DisjointSets sets(g.num_nodes());
  for (const Edge& e : g.edges()) sets.unite(e.u, e.v);
  return sets.components();
}

bool is_connected(const Graph& g) {
  if (g.num_nodes() == 0) throw ContractError("is_connected: graph has no nodes");
  return count_components(g) == 1;
}

Matrix adjacency(const Graph& g) {
  Matrix a(g.num_nodes(), g.num_nodes());
  for (const Edge& e : g.edges()) a(e.u, e.v) = a(e.v, e.u) = 1.0;
  return a;
}

Matrix degree_matrix(const Graph& g) {
  Matrix d(g.num_nodes(), g.num_nodes());
  for (std::size_t v = 0; v < g.num_nodes(); ++v) d(v, v) = static_cast<double>(degree(g, v));
  return d;
}

double cosine_similarity(const Matrix& features, std::size_t i, std::size_t j) {
  const auto a = features.row(i);
  const auto b = features.row(j);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

Graph build_similarity_graph(const Matrix& features) {
  const std::size_t n = features.rows();
  if (n < 2) throw ContractError("build_similarity_graph: need at least 2 rows");

  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double x : features.row(i)) s += x * x;
    if (s == 0.0) {
      throw ContractError("build_similarity_graph: feature row " + std::to_string(i) +
                          " has zero norm");
    }
    norms[i] = std::sqrt(s);
  }

  struct Pair {
    double sim;
    std::size_t u, v;
  };
  std::vector<Pair> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t u = 0; u < n; ++u) {
    const auto a = features.row(u);
    for (std::size_t v = u + 1; v < n; ++v) {
      const auto b = features.row(v);
      double dot = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
      pairs.push_back({dot / (norms[u] * norms[v]), u, v});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
    if (x.sim != y.sim) return x.sim > y.sim;
    if (x.u != y.u) return x.u < y.u;
    return x.v < y.v;
  });

  Graph g(n);
  DisjointSets sets(n);
  for (const Pair& p : pairs) {
    if (sets.components() == 1) break;
    g.add_edge(p.u, p.v);
    sets.unite(p.u, p.v);
  }
  return g;
}

FeaturedGraph::FeaturedGraph(Graph g, Matrix f, std::optional<std::vector<int>> l)
    : graph(std::move(g)), features(std::move(f)), labels(std::move(l)) {
  if (features.rows() != graph.num_nodes()) {
    throw ShapeError("FeaturedGraph: " + std::to_string(features.rows()) + " feature rows for " +
                     std::to_string(graph.num_nodes()) + " nodes");
  }
  if (labels) {
    if (labels->size() != graph.num_nodes()) {
      throw ShapeError("FeaturedGraph: label count does not match node count");
    }
    for (int y : *labels)
      if (y != 0 && y != 1) throw ValidationError("FeaturedGraph: labels must be 0 or 1");
  }
}

}  // namespace sheafnn
