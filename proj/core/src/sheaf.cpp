#include "sheafnn/sheaf.hpp"

#include <algorithm>
#include <string>

#include "sheafnn/errors.hpp"
#include "sheafnn/linalg.hpp"

namespace sheafnn {
namespace {

void add_block(Matrix& target, std::size_t row0, std::size_t col0, const Matrix& block,
               double sign) {
  for (std::size_t i = 0; i < block.rows(); ++i)
    for (std::size_t j = 0; j < block.cols(); ++j) target(row0 + i, col0 + j) += sign * block(i, j);
}

}  // namespace

CellularSheaf::CellularSheaf(Graph graph, std::size_t stalk_dim, std::vector<Matrix> u_maps,
                             std::vector<Matrix> v_maps)
    : graph_(std::move(graph)),
      stalk_dim_(stalk_dim),
      u_maps_(std::move(u_maps)),
      v_maps_(std::move(v_maps)) {
  if (stalk_dim_ == 0) throw ContractError("CellularSheaf: stalk dimension must be positive");
  if (u_maps_.size() != graph_.num_edges() || v_maps_.size() != graph_.num_edges()) {
    throw ShapeError("CellularSheaf: expected " + std::to_string(2 * graph_.num_edges()) +
                     " restriction maps, got " + std::to_string(u_maps_.size() + v_maps_.size()));
  }
  for (const auto* maps : {&u_maps_, &v_maps_}) {
    for (const Matrix& m : *maps) {
      if (m.rows() != stalk_dim_ || m.cols() != stalk_dim_) {
        throw ShapeError("CellularSheaf: restriction map is " + shape_of(m) + ", expected " +
                         std::to_string(stalk_dim_) + "x" + std::to_string(stalk_dim_));
      }
      if (!m.all_finite()) throw NumericError("CellularSheaf: non-finite restriction map");
    }
  }
}

const Matrix& CellularSheaf::restriction(std::size_t edge, Side side) const {
  if (edge >= graph_.num_edges()) {
    throw ContractError("restriction: edge " + std::to_string(edge) + " out of range");
  }
  return side == Side::u ? u_maps_[edge] : v_maps_[edge];
}

CellularSheaf constant_sheaf(const Graph& g, std::size_t d) {
  if (d == 0) throw ContractError("constant_sheaf: stalk dimension must be positive");
  std::vector<Matrix> maps(g.num_edges(), Matrix::identity(d));
  return CellularSheaf(g, d, maps, maps);
}

Matrix coboundary(const CellularSheaf& s) {
  const std::size_t d = s.stalk_dim();
  const Graph& g = s.graph();
  Matrix delta(g.num_edges() * d, g.num_nodes() * d);
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const Edge& edge = g.edges()[e];
    add_block(delta, e * d, edge.u * d, s.restriction(e, Side::u), 1.0);
    add_block(delta, e * d, edge.v * d, s.restriction(e, Side::v), -1.0);
  }
  return delta;
}

Matrix sheaf_laplacian(const CellularSheaf& s) {
  const std::size_t d = s.stalk_dim();
  const Graph& g = s.graph();
  Matrix lap(g.num_nodes() * d, g.num_nodes() * d);
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const Edge& edge = g.edges()[e];
    const Matrix& fu = s.restriction(e, Side::u);
    const Matrix& fv = s.restriction(e, Side::v);
    add_block(lap, edge.u * d, edge.u * d, matmul_tn(fu, fu), 1.0);
    add_block(lap, edge.v * d, edge.v * d, matmul_tn(fv, fv), 1.0);
    add_block(lap, edge.u * d, edge.v * d, matmul_tn(fu, fv), -1.0);
    add_block(lap, edge.v * d, edge.u * d, matmul_tn(fv, fu), -1.0);
  }
  return lap;
}

std::vector<Matrix> sheaf_degree_blocks(const CellularSheaf& s) {
  const std::size_t d = s.stalk_dim();
  const Graph& g = s.graph();
  std::vector<Matrix> blocks(g.num_nodes(), Matrix(d, d));
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const Edge& edge = g.edges()[e];
    blocks[edge.u] += matmul_tn(s.restriction(e, Side::u), s.restriction(e, Side::u));
    blocks[edge.v] += matmul_tn(s.restriction(e, Side::v), s.restriction(e, Side::v));
  }
  return blocks;
}

Matrix normalized_sheaf_laplacian(const CellularSheaf& s, double eps) {
  const std::size_t d = s.stalk_dim();
  const std::size_t n = s.graph().num_nodes();
  const Matrix lap = sheaf_laplacian(s);
  const std::vector<Matrix> blocks = sheaf_degree_blocks(s);
  std::vector<Matrix> inv(n);
  for (std::size_t v = 0; v < n; ++v) inv[v] = inv_sqrt_psd(blocks[v], eps);

  Matrix out(n * d, n * d);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      Matrix block(d, d);
      bool nonzero = false;
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
          block(i, j) = lap(a * d + i, b * d + j);
          nonzero = nonzero || block(i, j) != 0.0;
        }
      if (!nonzero) continue;
      add_block(out, a * d, b * d, matmul(matmul(inv[a], block), inv[b]), 1.0);
    }
  }
  return out;
}

Matrix global_sections(const CellularSheaf& s, double tol) {
  const SymEig eig = sym_eig(sheaf_laplacian(s));
  const std::size_t n = eig.values.size();
  if (n == 0) return Matrix();
  const double threshold = tol * std::max(1.0, eig.values.back());
  std::size_t k = 0;
  while (k < n && eig.values[k] < threshold) ++k;
  Matrix basis(n, k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) basis(i, j) = eig.vectors(i, j);
  return basis;
}

}  // namespace sheafnn
