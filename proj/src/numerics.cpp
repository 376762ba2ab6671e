#include "mtml/numerics.hpp"

#include <cmath>
#include <stdexcept>

#include "mtml/kernels.hpp"
#include "mtml/threads.hpp"

namespace mtml {

bool all_finite(const Matrix& m) {
  for (double v : m.data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix matmul(const Matrix& A, const Matrix& B) {
  if (A.cols != B.rows) throw std::invalid_argument("matmul: inner dimensions disagree");
  Matrix C(A.rows, B.cols);
  const auto& k = kernels::ops();
  parallel_for(A.rows, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      double* ci = C.row(i);
      const double* ai = A.row(i);
      for (std::size_t r = 0; r < A.cols; ++r) {
        k.axpy(ci, B.row(r), ai[r], B.cols);
      }
    }
  });
  return C;
}

Matrix matmul_transpose_a(const Matrix& A, const Matrix& B) {
  if (A.rows != B.rows) throw std::invalid_argument("matmul_transpose_a: row counts disagree");
  Matrix C(A.cols, B.cols);
  const auto& k = kernels::ops();
  // accumulate row by row; each output row r only ever touched via A[.,r]
  for (std::size_t i = 0; i < A.rows; ++i) {
    const double* ai = A.row(i);
    const double* bi = B.row(i);
    for (std::size_t r = 0; r < A.cols; ++r) {
      k.axpy(C.row(r), bi, ai[r], B.cols);
    }
  }
  return C;
}

Matrix matmul_transpose_b(const Matrix& A, const Matrix& B) {
  if (A.cols != B.cols) throw std::invalid_argument("matmul_transpose_b: column counts disagree");
  Matrix C(A.rows, B.rows);
  const auto& k = kernels::ops();
  parallel_for(A.rows, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      double* ci = C.row(i);
      const double* ai = A.row(i);
      for (std::size_t j = 0; j < B.rows; ++j) {
        ci[j] = k.dot(ai, B.row(j), A.cols);
      }
    }
  });
  return C;
}

Matrix pairwise_euclidean(const Matrix& X) {
  if (X.rows < 1 || X.cols < 1) throw std::invalid_argument("pairwise_euclidean: empty matrix");
  if (!all_finite(X)) throw std::invalid_argument("pairwise_euclidean: non-finite input");
  Matrix D(X.rows, X.rows);
  const auto& k = kernels::ops();
  parallel_for(X.rows, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      for (std::size_t j = i + 1; j < X.rows; ++j) {
        D(i, j) = std::sqrt(k.squared_distance(X.row(i), X.row(j), X.cols));
      }
    }
  });
  // mirror the upper triangle so symmetry is exact
  for (std::size_t i = 0; i < X.rows; ++i) {
    for (std::size_t j = i + 1; j < X.rows; ++j) D(j, i) = D(i, j);
  }
  return D;
}

Matrix l2_normalize_rows(const Matrix& X) {
  Matrix Y = X;
  const auto& k = kernels::ops();
  for (std::size_t i = 0; i < X.rows; ++i) {
    const double norm = std::sqrt(k.dot(X.row(i), X.row(i), X.cols));
    k.scale(Y.row(i), 1.0 / (norm + kNormEpsilon), X.cols);
  }
  return Y;
}

std::vector<double> l2_normalize_backward(std::span<const double> row,
                                          std::span<const double> upstream) {
  const std::size_t n = row.size();
  if (upstream.size() != n) throw std::invalid_argument("l2_normalize_backward: size mismatch");
  const auto& k = kernels::ops();
  const double norm = std::sqrt(k.dot(row.data(), row.data(), n));
  const double inv = 1.0 / (norm + kNormEpsilon);
  std::vector<double> u(row.begin(), row.end());
  k.scale(u.data(), inv, n);
  std::vector<double> out(upstream.begin(), upstream.end());
  const double proj = k.dot(u.data(), upstream.data(), n);
  k.axpy(out.data(), u.data(), -proj, n);
  k.scale(out.data(), inv, n);
  return out;
}

void l2_normalize_rows_backward(const Matrix& raw, const Matrix& upstream, Matrix& grad_out) {
  if (!raw.same_shape(upstream)) {
    throw std::invalid_argument("l2_normalize_rows_backward: shape mismatch");
  }
  grad_out = Matrix(raw.rows, raw.cols);
  for (std::size_t i = 0; i < raw.rows; ++i) {
    const auto g = l2_normalize_backward({raw.row(i), raw.cols}, {upstream.row(i), raw.cols});
    std::copy(g.begin(), g.end(), grad_out.row(i));
  }
}

AdamState make_adam_state(std::size_t rows, std::size_t cols, double lr, double beta1,
                          double beta2, double epsilon) {
  AdamState s;
  s.m = Matrix(rows, cols);
  s.v = Matrix(rows, cols);
  s.lr = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  return s;
}

void adam_update(Matrix& params, const Matrix& grads, AdamState& state) {
  if (!params.same_shape(grads) || !params.same_shape(state.m) || !params.same_shape(state.v)) {
    throw std::invalid_argument("adam_update: shape mismatch");
  }
  state.t += 1;
  const double bc1 = 1.0 / (1.0 - std::pow(state.beta1, static_cast<double>(state.t)));
  const double bc2 = 1.0 / (1.0 - std::pow(state.beta2, static_cast<double>(state.t)));
  kernels::ops().adam_step(params.data.data(), grads.data.data(), state.m.data.data(),
                           state.v.data.data(), params.size(), state.lr, state.beta1, state.beta2,
                           state.epsilon, bc1, bc2);
}

}  // namespace mtml
