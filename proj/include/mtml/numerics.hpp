#pragma once

#include <cstdint>
#include <span>

#include "mtml/matrix.hpp"

namespace mtml {

inline constexpr double kNormEpsilon = 1e-12;

// C = A * B
Matrix matmul(const Matrix& A, const Matrix& B);
// C = A^T * B   (A is m x k stored row-major, result k x n)
Matrix matmul_transpose_a(const Matrix& A, const Matrix& B);
// C = A * B^T   (B is n x k, result m x n)
Matrix matmul_transpose_b(const Matrix& A, const Matrix& B);

// Symmetric n x n matrix of Euclidean row distances, zero diagonal.
// Throws on non-finite input.
Matrix pairwise_euclidean(const Matrix& X);

// Each row divided by (||row|| + kNormEpsilon); zero rows pass through.
Matrix l2_normalize_rows(const Matrix& X);

// Gradient of l2_normalize_rows for one row: (I - u u^T) upstream / (||row|| + eps)
// with u the normalized row.
std::vector<double> l2_normalize_backward(std::span<const double> row,
                                          std::span<const double> upstream);

// Batched version; grad_out must match raw's shape.
void l2_normalize_rows_backward(const Matrix& raw, const Matrix& upstream, Matrix& grad_out);

bool all_finite(const Matrix& m);

struct AdamState {
  Matrix m;
  Matrix v;
  std::int64_t t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState make_adam_state(std::size_t rows, std::size_t cols, double lr, double beta1 = 0.9,
                          double beta2 = 0.999, double epsilon = 1e-8);

// In-place bias-corrected Adam step; increments state.t.
void adam_update(Matrix& params, const Matrix& grads, AdamState& state);

}  // namespace mtml
