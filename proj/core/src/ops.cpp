#include "sheafnn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "sheafnn/errors.hpp"
#include "sheafnn/linalg.hpp"

namespace sheafnn::nn {
namespace {

Tape& same_tape(Var a, Var b, const char* op) {
  if (!a.valid() || !b.valid()) throw ContractError(std::string(op) + ": uninitialized variable");
  if (a.tape() != b.tape()) throw ContractError(std::string(op) + ": operands on different tapes");
  return *a.tape();
}

Tape& tape_of(Var a, const char* op) {
  if (!a.valid()) throw ContractError(std::string(op) + ": uninitialized variable");
  return *a.tape();
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": " + shape_of(a) + " vs " + shape_of(b));
  }
}

void require_row_vector(const Matrix& a, const Matrix& row, const char* op) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError(std::string(op) + ": row " + shape_of(row) + " for " + shape_of(a));
  }
}

std::size_t block_dim(const Matrix& a, const char* op) {
  const auto d = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(a.cols()))));
  if (d == 0 || d * d != a.cols()) {
    throw ShapeError(std::string(op) + ": " + shape_of(a) + " rows are not square blocks");
  }
  return d;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b, "matmul");
  return t.record(sheafnn::matmul(a.value(), b.value()), t.requires_grad({a, b}),
                  [&t, a, b](const Matrix& g) {
                    if (Matrix* ga = t.grad_slot(a)) *ga += matmul_nt(g, t.value(b));
                    if (Matrix* gb = t.grad_slot(b)) *gb += matmul_tn(t.value(a), g);
                  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b, "add");
  require_same_shape(a.value(), b.value(), "add");
  return t.record(a.value() + b.value(), t.requires_grad({a, b}), [&t, a, b](const Matrix& g) {
    if (Matrix* ga = t.grad_slot(a)) *ga += g;
    if (Matrix* gb = t.grad_slot(b)) *gb += g;
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b, "sub");
  require_same_shape(a.value(), b.value(), "sub");
  return t.record(a.value() - b.value(), t.requires_grad({a, b}), [&t, a, b](const Matrix& g) {
    if (Matrix* ga = t.grad_slot(a)) *ga += g;
    if (Matrix* gb = t.grad_slot(b)) *gb -= g;
  });
}

Var scale(Var a, double s) {
  Tape& t = tape_of(a, "scale");
  return t.record(a.value() * s, t.requires_grad(a), [&t, a, s](const Matrix& g) {
    if (Matrix* ga = t.grad_slot(a)) *ga += g * s;
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a, "sum");
  double s = 0.0;
  for (double x : a.value().data()) s += x;
  return t.record(Matrix(1, 1, s), t.requires_grad(a), [&t, a](const Matrix& g) {
    if (Matrix* ga = t.grad_slot(a)) {
      for (double& x : ga->data()) x += g(0, 0);
    }
  });
}

Var add_row(Var a, Var row) {
  Tape& t = same_tape(a, row, "add_row");
  require_row_vector(a.value(), row.value(), "add_row");
  Matrix out = a.value();
  const Matrix& r = row.value();
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += r(0, j);
  return t.record(std::move(out), t.requires_grad({a, row}), [&t, a, row](const Matrix& g) {
    if (Matrix* ga = t.grad_slot(a)) *ga += g;
    if (Matrix* gr = t.grad_slot(row)) {
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) (*gr)(0, j) += g(i, j);
    }
  });
}

Var mul_row(Var a, Var row) {
  Tape& t = same_tape(a, row, "mul_row");
  require_row_vector(a.value(), row.value(), "mul_row");
  Matrix out = a.value();
  const Matrix& r = row.value();
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= r(0, j);
  return t.record(std::move(out), t.requires_grad({a, row}), [&t, a, row](const Matrix& g) {
    const Matrix& x = t.value(a);
    const Matrix& r = t.value(row);
    if (Matrix* ga = t.grad_slot(a)) {
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) (*ga)(i, j) += g(i, j) * r(0, j);
    }
    if (Matrix* gr = t.grad_slot(row)) {
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) (*gr)(0, j) += g(i, j) * x(i, j);
    }
  });
}

Var mul_const(Var a, const Matrix& m) {
  Tape& t = tape_of(a, "mul_const");
  require_same_shape(a.value(), m, "mul_const");
  return t.record(hadamard(a.value(), m), t.requires_grad(a), [&t, a, m](const Matrix& g) {
    if (Matrix* ga = t.grad_slot(a)) *ga += hadamard(g, m);
  });
}

Var activate(Var a, Activation act) {
  if (act == Activation::identity) return a;
  Tape& t = tape_of(a, "activate");
  Matrix out = a.value();
  for (double& x : out.data()) {
    if (act == Activation::relu) {
      x = x > 0.0 ? x : 0.0;
    } else {
      x = x > 0.0 ? x : std::expm1(x);
    }
  }
  return t.record(std::move(out), t.requires_grad(a), [&t, a, act](const Matrix& g) {
    Matrix* ga = t.grad_slot(a);
    if (ga == nullptr) return;
    const auto x = t.value(a).data();
    auto gd = g.data();
    auto out = ga->data();
    for (std::size_t i = 0; i < x.size(); ++i) {
      double d;
      if (act == Activation::relu) {
        d = x[i] > 0.0 ? 1.0 : 0.0;
      } else {
        d = x[i] > 0.0 ? 1.0 : std::exp(x[i]);
      }
      out[i] += gd[i] * d;
    }
  });
}

Var leaky_relu(Var a, double slope) {
  Tape& t = tape_of(a, "leaky_relu");
  Matrix out = a.value();
  for (double& x : out.data()) x = x > 0.0 ? x : slope * x;
  return t.record(std::move(out), t.requires_grad(a), [&t, a, slope](const Matrix& g) {
    Matrix* ga = t.grad_slot(a);
    if (ga == nullptr) return;
    const auto x = t.value(a).data();
    for (std::size_t i = 0; i < x.size(); ++i)
      ga->data()[i] += g.data()[i] * (x[i] > 0.0 ? 1.0 : slope);
  });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  Tape& t = tape_of(a, "reshape");
  return t.record(a.value().reshaped(rows, cols), t.requires_grad(a), [&t, a](const Matrix& g) {
    Matrix* ga = t.grad_slot(a);
    if (ga == nullptr) return;
    for (std::size_t i = 0; i < g.size(); ++i) ga->data()[i] += g.data()[i];
  });
}

Var concat_cols(Var a, Var b) {
  Tape& t = same_tape(a, b, "concat_cols");
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  if (x.rows() != y.rows()) throw ShapeError("concat_cols: " + shape_of(x) + " vs " + shape_of(y));
  Matrix out(x.rows(), x.cols() + y.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::copy_n(x.row(i).data(), x.cols(), out.row(i).data());
    std::copy_n(y.row(i).data(), y.cols(), out.row(i).data() + x.cols());
  }
  return t.record(std::move(out), t.requires_grad({a, b}), [&t, a, b](const Matrix& g) {
    const std::size_t ca = t.value(a).cols();
    if (Matrix* ga = t.grad_slot(a)) {
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < ca; ++j) (*ga)(i, j) += g(i, j);
    }
    if (Matrix* gb = t.grad_slot(b)) {
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < gb->cols(); ++j) (*gb)(i, j) += g(i, ca + j);
    }
  });
}

Var gather_rows(Var a, const std::vector<std::size_t>& idx) {
  Tape& t = tape_of(a, "gather_rows");
  Matrix out = select_rows(a.value(), idx);
  return t.record(std::move(out), t.requires_grad(a), [&t, a, idx](const Matrix& g) {
    Matrix* ga = t.grad_slot(a);
    if (ga == nullptr) return;
    const std::size_t c = g.cols();
    for (std::size_t r = 0; r < idx.size(); ++r) {
      double* dst = ga->row(idx[r]).data();
      const double* src = g.row(r).data();
      for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
    }
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  Tape& t = tape_of(a, "slice_rows");
  const Matrix& x = a.value();
  if (begin + count > x.rows()) {
    throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") of " + shape_of(x));
  }
  Matrix out(count, x.cols());
  std::copy_n(x.row(begin).data(), count * x.cols(), out.data().data());
  return t.record(std::move(out), t.requires_grad(a), [&t, a, begin](const Matrix& g) {
    Matrix* ga = t.grad_slot(a);
    if (ga == nullptr) return;
    double* dst = ga->row(begin).data();
    const auto src = g.data();
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
  });
}

Var scatter_add_rows(Var a, const std::vector<std::size_t>& idx, std::size_t rows) {
  Tape& t = tape_of(a, "scatter_add_rows");
  const Matrix& x = a.value();
  if (idx.size() != x.rows()) {
    throw ShapeError("scatter_add_rows: " + std::to_string(idx.size()) + " indices for " +
                     shape_of(x));
  }
  Matrix out(rows, x.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= rows) throw ShapeError("scatter_add_rows: index out of range");
    double* dst = out.row(idx[r]).data();
    const double* src = x.row(r).data();
    for (std::size_t j = 0; j < x.cols(); ++j) dst[j] += src[j];
  }
  return t.record(std::move(out), t.requires_grad(a), [&t, a, idx](const Matrix& g) {
    Matrix* ga = t.grad_slot(a);
    if (ga == nullptr) return;
    const std::size_t c = g.cols();
    for (std::size_t r = 0; r < idx.size(); ++r) {
      double* dst = ga->row(r).data();
      const double* src = g.row(idx[r]).data();
      for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
    }
  });
}

Var block_left_matmul(Var w, Var h) {
  Tape& t = same_tape(w, h, "block_left_matmul");
  const Matrix& wm = w.value();
  const Matrix& hm = h.value();
  const std::size_t d = wm.rows();
  if (wm.cols() != d || d == 0 || hm.rows() % d != 0) {
    throw ShapeError("block_left_matmul: W " + shape_of(wm) + " with H " + shape_of(hm));
  }
  const std::size_t blocks = hm.rows() / d;
  const std::size_t f = hm.cols();
  Matrix out(hm.rows(), f);
  for (std::size_t b = 0; b < blocks; ++b)
    for (std::size_t r = 0; r < d; ++r) {
      double* dst = out.row(b * d + r).data();
      for (std::size_t s = 0; s < d; ++s) {
        const double coef = wm(r, s);
        const double* src = hm.row(b * d + s).data();
        for (std::size_t j = 0; j < f; ++j) dst[j] += coef * src[j];
      }
    }
  return t.record(std::move(out), t.requires_grad({w, h}), [&t, w, h, d, blocks, f](const Matrix& g) {
    const Matrix& wm = t.value(w);
    const Matrix& hm = t.value(h);
    if (Matrix* gw = t.grad_slot(w)) {
      for (std::size_t b = 0; b < blocks; ++b)
        for (std::size_t r = 0; r < d; ++r)
          for (std::size_t s = 0; s < d; ++s) {
            double acc = 0.0;
            const double* gr = g.row(b * d + r).data();
            const double* hs = hm.row(b * d + s).data();
            for (std::size_t j = 0; j < f; ++j) acc += gr[j] * hs[j];
            (*gw)(r, s) += acc;
          }
    }
    if (Matrix* gh = t.grad_slot(h)) {
      for (std::size_t b = 0; b < blocks; ++b)
        for (std::size_t r = 0; r < d; ++r) {
          const double* gr = g.row(b * d + r).data();
          for (std::size_t s = 0; s < d; ++s) {
            const double coef = wm(r, s);
            double* dst = gh->row(b * d + s).data();
            for (std::size_t j = 0; j < f; ++j) dst[j] += coef * gr[j];
          }
        }
    }
  });
}

Var batched_matmul(Var a, Var b, bool transpose_a) {
  Tape& t = same_tape(a, b, "batched_matmul");
  const Matrix& am = a.value();
  const Matrix& bm = b.value();
  const std::size_t d = block_dim(am, "batched_matmul");
  if (am.rows() != bm.rows() || bm.cols() % d != 0) {
    throw ShapeError("batched_matmul: " + shape_of(am) + " with " + shape_of(bm));
  }
  const std::size_t k = bm.cols() / d;
  const std::size_t m = am.rows();
  Matrix out(m, d * k);
  for (std::size_t i = 0; i < m; ++i) {
    const double* A = am.row(i).data();
    const double* B = bm.row(i).data();
    double* C = out.row(i).data();
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t s = 0; s < d; ++s) {
        const double coef = transpose_a ? A[s * d + r] : A[r * d + s];
        if (coef == 0.0) continue;
        for (std::size_t c = 0; c < k; ++c) C[r * k + c] += coef * B[s * k + c];
      }
  }
  return t.record(std::move(out), t.requires_grad({a, b}),
                  [&t, a, b, d, k, m, transpose_a](const Matrix& g) {
                    const Matrix& am = t.value(a);
                    const Matrix& bm = t.value(b);
                    Matrix* ga = t.grad_slot(a);
                    Matrix* gb = t.grad_slot(b);
                    for (std::size_t i = 0; i < m; ++i) {
                      const double* A = am.row(i).data();
                      const double* B = bm.row(i).data();
                      const double* G = g.row(i).data();
                      for (std::size_t r = 0; r < d; ++r)
                        for (std::size_t s = 0; s < d; ++s) {
                          const std::size_t aidx = transpose_a ? s * d + r : r * d + s;
                          if (ga != nullptr) {
                            double acc = 0.0;
                            for (std::size_t c = 0; c < k; ++c) acc += G[r * k + c] * B[s * k + c];
                            ga->row(i)[aidx] += acc;
                          }
                          if (gb != nullptr) {
                            const double coef = A[aidx];
                            double* GB = gb->row(i).data();
                            for (std::size_t c = 0; c < k; ++c) GB[s * k + c] += coef * G[r * k + c];
                          }
                        }
                    }
                  });
}

Var batched_gram(Var a) {
  Tape& t = tape_of(a, "batched_gram");
  const Matrix& am = a.value();
  const std::size_t d = block_dim(am, "batched_gram");
  Matrix out(am.rows(), d * d);
  for (std::size_t i = 0; i < am.rows(); ++i) {
    const double* A = am.row(i).data();
    double* C = out.row(i).data();
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) {
        double acc = 0.0;
        for (std::size_t s = 0; s < d; ++s) acc += A[s * d + r] * A[s * d + c];
        C[r * d + c] = acc;
      }
  }
  return t.record(std::move(out), t.requires_grad(a), [&t, a, d](const Matrix& g) {
    Matrix* ga = t.grad_slot(a);
    if (ga == nullptr) return;
    const Matrix& am = t.value(a);
    for (std::size_t i = 0; i < am.rows(); ++i) {
      const double* A = am.row(i).data();
      const double* G = g.row(i).data();
      double* GA = ga->row(i).data();
      for (std::size_t s = 0; s < d; ++s)
        for (std::size_t r = 0; r < d; ++r) {
          double acc = 0.0;
          for (std::size_t c = 0; c < d; ++c) acc += A[s * d + c] * (G[r * d + c] + G[c * d + r]);
          GA[s * d + r] += acc;
        }
    }
  });
}

Var batched_inv_sqrt_psd(Var a, double eps) {
  Tape& t = tape_of(a, "batched_inv_sqrt_psd");
  const Matrix& am = a.value();
  const std::size_t d = block_dim(am, "batched_inv_sqrt_psd");
  const std::size_t m = am.rows();

  auto eigs = std::make_shared<std::vector<SymEig>>(m);
  Matrix out(m, d * d);
  Matrix block(d, d);
  for (std::size_t i = 0; i < m; ++i) {
    const double* A = am.row(i).data();
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) block(r, c) = 0.5 * (A[r * d + c] + A[c * d + r]);
    SymEig eig = sym_eig(block);
    const double scale = std::max(1.0, std::abs(eig.values.back()));
    for (double& lambda : eig.values) {
      if (lambda < -1e-8 * scale) {
        throw ContractError("batched_inv_sqrt_psd: negative eigenvalue " + std::to_string(lambda));
      }
      lambda = std::max(lambda, 0.0);
      if (lambda + eps <= 0.0) throw NumericError("batched_inv_sqrt_psd: singular block");
    }
    double* C = out.row(i).data();
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k)
          acc += eig.vectors(r, k) * eig.vectors(c, k) / std::sqrt(eig.values[k] + eps);
        C[r * d + c] = acc;
      }
    (*eigs)[i] = std::move(eig);
  }

  return t.record(std::move(out), t.requires_grad(a), [&t, a, d, eps, eigs](const Matrix& g) {
    Matrix* ga = t.grad_slot(a);
    if (ga == nullptr) return;
    auto f = [eps](double l) { return 1.0 / std::sqrt(l + eps); };
    auto fprime = [eps](double l) { return -0.5 / ((l + eps) * std::sqrt(l + eps)); };
    Matrix gs(d, d), phi(d, d);
    for (std::size_t i = 0; i < eigs->size(); ++i) {
      const SymEig& eig = (*eigs)[i];
      const Matrix& v = eig.vectors;
      const double* G = g.row(i).data();
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) gs(r, c) = 0.5 * (G[r * d + c] + G[c * d + r]);
      for (std::size_t p = 0; p < d; ++p)
        for (std::size_t q = 0; q < d; ++q) {
          const double lp = eig.values[p];
          const double lq = eig.values[q];
          const double gap = lp - lq;
          if (std::abs(gap) > 1e-9 * std::max({1.0, std::abs(lp), std::abs(lq)})) {
            phi(p, q) = (f(lp) - f(lq)) / gap;
          } else {
            phi(p, q) = fprime(0.5 * (lp + lq));
          }
        }
      // Vᵀ Gs V, scaled by phi, rotated back.
      const Matrix inner = hadamard(matmul(matmul_tn(v, gs), v), phi);
      const Matrix back = matmul_nt(matmul(v, inner), v);
      double* GA = ga->row(i).data();
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) GA[r * d + c] += back(r, c);
    }
  });
}

Var column_standardize(Var a, double eps, Matrix* mean_out, Matrix* var_out) {
  Tape& t = tape_of(a, "column_standardize");
  const Matrix& x = a.value();
  const std::size_t n = x.rows();
  const std::size_t c = x.cols();
  if (n == 0) throw ShapeError("column_standardize: empty input");
  Matrix mean(1, c), var(1, c);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) mean(0, j) += x(i, j);
  mean *= 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double dlt = x(i, j) - mean(0, j);
      var(0, j) += dlt * dlt;
    }
  var *= 1.0 / static_cast<double>(n);
  auto inv_std = std::make_shared<std::vector<double>>(c);
  for (std::size_t j = 0; j < c; ++j) (*inv_std)[j] = 1.0 / std::sqrt(var(0, j) + eps);
  Matrix y(n, c);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) y(i, j) = (x(i, j) - mean(0, j)) * (*inv_std)[j];
  if (mean_out != nullptr) *mean_out = mean;
  if (var_out != nullptr) *var_out = var;

  if (!t.requires_grad(a)) return t.record(std::move(y), false, {});
  const Matrix yv = y;
  return t.record(std::move(y), true, [&t, a, inv_std, yv](const Matrix& g) {
    Matrix* ga = t.grad_slot(a);
    if (ga == nullptr) return;
    const std::size_t n = g.rows();
    const std::size_t c = g.cols();
    for (std::size_t j = 0; j < c; ++j) {
      double mg = 0.0, mgy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        mg += g(i, j);
        mgy += g(i, j) * yv(i, j);
      }
      mg /= static_cast<double>(n);
      mgy /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i)
        (*ga)(i, j) += (g(i, j) - mg - yv(i, j) * mgy) * (*inv_std)[j];
    }
  });
}

Var column_standardize_with(Var a, const Matrix& mean, const Matrix& var, double eps) {
  Tape& t = tape_of(a, "column_standardize_with");
  const Matrix& x = a.value();
  require_row_vector(x, mean, "column_standardize_with");
  require_row_vector(x, var, "column_standardize_with");
  Matrix inv(1, x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) inv(0, j) = 1.0 / std::sqrt(var(0, j) + eps);
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) y(i, j) = (x(i, j) - mean(0, j)) * inv(0, j);
  return t.record(std::move(y), t.requires_grad(a), [&t, a, inv](const Matrix& g) {
    Matrix* ga = t.grad_slot(a);
    if (ga == nullptr) return;
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) (*ga)(i, j) += g(i, j) * inv(0, j);
  });
}

Var row_standardize(Var a, double eps) {
  Tape& t = tape_of(a, "row_standardize");
  const Matrix& x = a.value();
  const std::size_t n = x.rows();
  const std::size_t c = x.cols();
  if (c == 0) throw ShapeError("row_standardize: empty rows");
  Matrix y(n, c);
  auto inv_std = std::make_shared<std::vector<double>>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = x.row(i);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(c);
    (*inv_std)[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) y(i, j) = (row[j] - mean) * (*inv_std)[i];
  }
  if (!t.requires_grad(a)) return t.record(std::move(y), false, {});
  const Matrix yv = y;
  return t.record(std::move(y), true, [&t, a, inv_std, yv](const Matrix& g) {
    Matrix* ga = t.grad_slot(a);
    if (ga == nullptr) return;
    const std::size_t c = g.cols();
    for (std::size_t i = 0; i < g.rows(); ++i) {
      double mg = 0.0, mgy = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        mg += g(i, j);
        mgy += g(i, j) * yv(i, j);
      }
      mg /= static_cast<double>(c);
      mgy /= static_cast<double>(c);
      for (std::size_t j = 0; j < c; ++j)
        (*ga)(i, j) += (g(i, j) - mg - yv(i, j) * mgy) * (*inv_std)[i];
    }
  });
}

Var row_l2_normalize(Var a, double eps) {
  Tape& t = tape_of(a, "row_l2_normalize");
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  auto norms = std::make_shared<std::vector<double>>(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (double v : x.row(i)) s += v * v;
    (*norms)[i] = std::sqrt(s);
    const double denom = std::max((*norms)[i], eps);
    for (std::size_t j = 0; j < x.cols(); ++j) y(i, j) = x(i, j) / denom;
  }
  if (!t.requires_grad(a)) return t.record(std::move(y), false, {});
  const Matrix yv = y;
  return t.record(std::move(y), true, [&t, a, norms, yv, eps](const Matrix& g) {
    Matrix* ga = t.grad_slot(a);
    if (ga == nullptr) return;
    for (std::size_t i = 0; i < g.rows(); ++i) {
      const double norm = (*norms)[i];
      if (norm > eps) {
        double dot = 0.0;
        for (std::size_t j = 0; j < g.cols(); ++j) dot += yv(i, j) * g(i, j);
        for (std::size_t j = 0; j < g.cols(); ++j) (*ga)(i, j) += (g(i, j) - yv(i, j) * dot) / norm;
      } else {
        for (std::size_t j = 0; j < g.cols(); ++j) (*ga)(i, j) += g(i, j) / eps;
      }
    }
  });
}

Var head_dot(Var x, Var att, std::size_t heads) {
  Tape& t = same_tape(x, att, "head_dot");
  const Matrix& xm = x.value();
  const Matrix& am = att.value();
  require_row_vector(xm, am, "head_dot");
  if (heads == 0 || xm.cols() % heads != 0) throw ShapeError("head_dot: columns not divisible by heads");
  const std::size_t width = xm.cols() / heads;
  Matrix out(xm.rows(), heads);
  for (std::size_t i = 0; i < xm.rows(); ++i)
    for (std::size_t h = 0; h < heads; ++h) {
      double acc = 0.0;
      for (std::size_t c = h * width; c < (h + 1) * width; ++c) acc += xm(i, c) * am(0, c);
      out(i, h) = acc;
    }
  return t.record(std::move(out), t.requires_grad({x, att}), [&t, x, att, width](const Matrix& g) {
    const Matrix& xm = t.value(x);
    const Matrix& am = t.value(att);
    Matrix* gx = t.grad_slot(x);
    Matrix* gatt = t.grad_slot(att);
    for (std::size_t i = 0; i < xm.rows(); ++i)
      for (std::size_t c = 0; c < xm.cols(); ++c) {
        const double gh = g(i, c / width);
        if (gx != nullptr) (*gx)(i, c) += gh * am(0, c);
        if (gatt != nullptr) (*gatt)(0, c) += gh * xm(i, c);
      }
  });
}

Var head_scale(Var x, Var alpha, std::size_t heads) {
  Tape& t = same_tape(x, alpha, "head_scale");
  const Matrix& xm = x.value();
  const Matrix& am = alpha.value();
  if (heads == 0 || xm.cols() % heads != 0 || am.rows() != xm.rows() || am.cols() != heads) {
    throw ShapeError("head_scale: " + shape_of(xm) + " with weights " + shape_of(am));
  }
  const std::size_t width = xm.cols() / heads;
  Matrix out(xm.rows(), xm.cols());
  for (std::size_t i = 0; i < xm.rows(); ++i)
    for (std::size_t c = 0; c < xm.cols(); ++c) out(i, c) = xm(i, c) * am(i, c / width);
  return t.record(std::move(out), t.requires_grad({x, alpha}), [&t, x, alpha, width](const Matrix& g) {
    const Matrix& xm = t.value(x);
    const Matrix& am = t.value(alpha);
    Matrix* gx = t.grad_slot(x);
    Matrix* ga = t.grad_slot(alpha);
    for (std::size_t i = 0; i < xm.rows(); ++i)
      for (std::size_t c = 0; c < xm.cols(); ++c) {
        if (gx != nullptr) (*gx)(i, c) += g(i, c) * am(i, c / width);
        if (ga != nullptr) (*ga)(i, c / width) += g(i, c) * xm(i, c);
      }
  });
}

Var segment_softmax(Var scores, const std::vector<std::size_t>& segments,
                    std::size_t num_segments) {
  Tape& t = tape_of(scores, "segment_softmax");
  const Matrix& s = scores.value();
  if (segments.size() != s.rows()) throw ShapeError("segment_softmax: one segment id per row required");
  const std::size_t h = s.cols();
  Matrix maxv(num_segments, h, -std::numeric_limits<double>::infinity());
  for (std::size_t e = 0; e < s.rows(); ++e) {
    if (segments[e] >= num_segments) throw ShapeError("segment_softmax: segment id out of range");
    for (std::size_t k = 0; k < h; ++k) maxv(segments[e], k) = std::max(maxv(segments[e], k), s(e, k));
  }
  Matrix out(s.rows(), h);
  Matrix denom(num_segments, h);
  for (std::size_t e = 0; e < s.rows(); ++e)
    for (std::size_t k = 0; k < h; ++k) {
      out(e, k) = std::exp(s(e, k) - maxv(segments[e], k));
      denom(segments[e], k) += out(e, k);
    }
  for (std::size_t e = 0; e < s.rows(); ++e)
    for (std::size_t k = 0; k < h; ++k) out(e, k) /= denom(segments[e], k);
  if (!t.requires_grad(scores)) return t.record(std::move(out), false, {});
  const Matrix alpha = out;
  return t.record(std::move(out), true, [&t, scores, segments, num_segments, alpha](const Matrix& g) {
    Matrix* gs = t.grad_slot(scores);
    if (gs == nullptr) return;
    const std::size_t h = alpha.cols();
    Matrix dot(num_segments, h);
    for (std::size_t e = 0; e < alpha.rows(); ++e)
      for (std::size_t k = 0; k < h; ++k) dot(segments[e], k) += alpha(e, k) * g(e, k);
    for (std::size_t e = 0; e < alpha.rows(); ++e)
      for (std::size_t k = 0; k < h; ++k)
        (*gs)(e, k) += alpha(e, k) * (g(e, k) - dot(segments[e], k));
  });
}

Var bce_with_logits(Var logits, const std::vector<double>& targets,
                    const std::vector<std::size_t>& rows) {
  Tape& t = tape_of(logits, "bce_with_logits");
  const Matrix& z = logits.value();
  if (targets.size() != z.rows()) {
    throw ShapeError("bce_with_logits: " + std::to_string(targets.size()) + " targets for " +
                     shape_of(z));
  }
  if (rows.empty()) throw ContractError("bce_with_logits: no rows selected");
  double loss = 0.0;
  for (std::size_t r : rows) {
    const double x = z(r, 0);
    loss += std::max(x, 0.0) - x * targets[r] + std::log1p(std::exp(-std::abs(x)));
  }
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  return t.record(Matrix(1, 1, loss * inv_n), t.requires_grad(logits),
                  [&t, logits, targets, rows, inv_n](const Matrix& g) {
                    Matrix* gz = t.grad_slot(logits);
                    if (gz == nullptr) return;
                    const Matrix& z = t.value(logits);
                    for (std::size_t r : rows)
                      (*gz)(r, 0) += g(0, 0) * inv_n * (sigmoid(z(r, 0)) - targets[r]);
                  });
}

Var dropout(Var a, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw ContractError("dropout: rate must lie in [0, 1)");
  if (p == 0.0) return a;
  const Matrix& x = a.value();
  Matrix mask(x.rows(), x.cols());
  const double keep = 1.0 / (1.0 - p);
  for (double& m : mask.data()) m = uniform01(rng) >= p ? keep : 0.0;
  return mul_const(a, mask);
}

}  // namespace sheafnn::nn
