#pragma once

#include <cstddef>
#include <vector>

#include "sheafnn/graph.hpp"
#include "sheafnn/matrix.hpp"

namespace sheafnn {

/// Which endpoint of a canonically oriented edge (u < v) a restriction map
/// belongs to.
enum class Side { u, v };

/// Cellular sheaf on a graph with uniform stalk dimension d on vertices and
/// edges. Holds one d×d restriction map F_{x≤e} per (edge, endpoint).
class CellularSheaf {
 public:
  CellularSheaf(Graph graph, std::size_t stalk_dim, std::vector<Matrix> u_maps,
                std::vector<Matrix> v_maps);

  const Graph& graph() const noexcept { return graph_; }
  std::size_t stalk_dim() const noexcept { return stalk_dim_; }
  const Matrix& restriction(std::size_t edge, Side side) const;

 private:
  Graph graph_;
  std::size_t stalk_dim_;
  std::vector<Matrix> u_maps_;
  std::vector<Matrix> v_maps_;
};

/// Every restriction map is the identity.
CellularSheaf constant_sheaf(const Graph& g, std::size_t d);

/// (|E|·d) × (|V|·d) operator with (δx)_e = F_{u≤e} x_u − F_{v≤e} x_v.
Matrix coboundary(const CellularSheaf& s);

/// δᵀδ, assembled block by block.
Matrix sheaf_laplacian(const CellularSheaf& s);

/// d×d diagonal blocks of the sheaf Laplacian, stacked: row block v is
/// Σ_{e∋v} F_{v≤e}ᵀ F_{v≤e}.
std::vector<Matrix> sheaf_degree_blocks(const CellularSheaf& s);

/// D^{-1/2} L D^{-1/2} with D the block diagonal of L; each block inverted
/// with `inv_sqrt_psd(block, eps)`.
Matrix normalized_sheaf_laplacian(const CellularSheaf& s, double eps = 1e-6);

/// Orthonormal basis (as columns) of the eigenspace of L with eigenvalues
/// below tol·max(1, λ_max).
Matrix global_sections(const CellularSheaf& s, double tol = 1e-8);

}  // namespace sheafnn
