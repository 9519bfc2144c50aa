#pragma once

#include <cstddef>
#include <vector>

#include "sheafnn/random.hpp"
#include "sheafnn/tape.hpp"

namespace sheafnn::nn {

enum class Activation { identity, relu, elu };

// Differentiable operations recorded on the tape of their inputs. Binary
// operations require both inputs to share a tape.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
Var sum(Var a);

/// a + 1·row, broadcasting a 1×c row over every row of a.
Var add_row(Var a, Var row);
/// a ∘ (1·row), broadcasting a 1×c row.
Var mul_row(Var a, Var row);
/// Elementwise product with a constant of the same shape.
Var mul_const(Var a, const Matrix& m);

Var activate(Var a, Activation act);
Var leaky_relu(Var a, double slope);

Var reshape(Var a, std::size_t rows, std::size_t cols);
Var concat_cols(Var a, Var b);
Var gather_rows(Var a, const std::vector<std::size_t>& idx);
/// Rows [begin, begin + count) of a.
Var slice_rows(Var a, std::size_t begin, std::size_t count);
/// out[idx[i]] += a[i]; out has `rows` rows.
Var scatter_add_rows(Var a, const std::vector<std::size_t>& idx, std::size_t rows);

/// (I_n ⊗ W)·H for H of shape (n·d)×f and W of shape d×d, computed block by
/// block without forming the Kronecker product.
Var block_left_matmul(Var w, Var h);

/// Row i of `a` is a row-major d×d matrix A_i, row i of `b` a row-major d×k
/// matrix B_i. Returns rows A_i·B_i (or A_iᵀ·B_i when `transpose_a`).
Var batched_matmul(Var a, Var b, bool transpose_a = false);
/// Rows A_iᵀ·A_i for row-major d×d blocks.
Var batched_gram(Var a);
/// Rows (A_i + eps·I)^{-1/2} for symmetric PSD d×d blocks. Backward uses the
/// Daleckii-Krein divided-difference formula.
Var batched_inv_sqrt_psd(Var a, double eps);

/// Column-wise (x − μ)/sqrt(σ² + eps) with batch statistics. Writes the
/// batch mean and biased variance (1×c) when the pointers are non-null.
Var column_standardize(Var a, double eps, Matrix* mean_out = nullptr, Matrix* var_out = nullptr);
/// Column-wise (x − mean)/sqrt(var + eps) with fixed statistics.
Var column_standardize_with(Var a, const Matrix& mean, const Matrix& var, double eps);
/// Row-wise (x − μ)/sqrt(σ² + eps).
Var row_standardize(Var a, double eps);
/// Row-wise x / max(‖x‖₂, eps).
Var row_l2_normalize(Var a, double eps = 1e-12);

/// out[i,h] = Σ_{c in head h} x[i,c]·att[0,c], heads splitting columns evenly.
Var head_dot(Var x, Var att, std::size_t heads);
/// out[e,c] = x[e,c]·alpha[e, head(c)].
Var head_scale(Var x, Var alpha, std::size_t heads);
/// Column-wise softmax over the rows sharing the same segment id.
Var segment_softmax(Var scores, const std::vector<std::size_t>& segments,
                    std::size_t num_segments);

/// Mean binary cross-entropy on logits (column 0) over `rows`.
Var bce_with_logits(Var logits, const std::vector<double>& targets,
                    const std::vector<std::size_t>& rows);

/// Inverted dropout: zeroes entries with probability p and rescales the
/// rest by 1/(1−p). Identity when p == 0.
Var dropout(Var a, double p, Rng& rng);

}  // namespace sheafnn::nn
