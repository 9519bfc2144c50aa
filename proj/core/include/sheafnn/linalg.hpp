#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sheafnn/matrix.hpp"

namespace sheafnn {

Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ·b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a·bᵀ without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix hadamard(const Matrix& a, const Matrix& b);

/// Kronecker product; block (i,j) of the result is a(i,j)·b.
Matrix kron(const Matrix& a, const Matrix& b);

double max_abs(const Matrix& a) noexcept;
double max_abs_diff(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a) noexcept;

bool is_symmetric(const Matrix& a, double tol);

struct SymEig {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column k pairs with values[k]
};

/// Eigendecomposition of a symmetric matrix (Householder tridiagonalization
/// and implicit QL, via Eigen).
/// Throws ContractError if `a` is not square and symmetric within
/// `symmetry_tol` (scaled by max(1, max|a|)), NumericError if the solver
/// does not converge.
SymEig sym_eig(const Matrix& a, double symmetry_tol = 1e-10);

/// V·diag((λ+eps)^{-1/2})·Vᵀ for a symmetric positive semi-definite `a`.
/// Eigenvalues in (-1e-8, 0) are treated as zero; anything lower throws
/// ContractError.
Matrix inv_sqrt_psd(const Matrix& a, double eps);

/// Rows `idx` of `a`, in the given order.
Matrix select_rows(const Matrix& a, std::span<const std::size_t> idx);

}  // namespace sheafnn
