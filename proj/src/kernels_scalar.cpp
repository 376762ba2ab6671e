#include "mtml/kernels.hpp"

#include <cmath>

// Reference kernels. Plain loops, fixed left-to-right reduction order; the
// SIMD variants are tested for equivalence against these.

namespace mtml::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += a[k] * b[k];
  return acc;
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
  }
  return acc;
}

void axpy_scalar(double* y, const double* x, double alpha, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

void scale_scalar(double* x, double alpha, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) x[k] *= alpha;
}

void hadamard_scalar(double* y, const double* x, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] *= x[k];
}

void relu_scalar(const double* z, double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = z[k] > 0.0 ? z[k] : 0.0;
}

void relu_backward_scalar(const double* z, const double* up, double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = z[k] > 0.0 ? up[k] : 0.0;
}

void adam_step_scalar(double* p, const double* g, double* m, double* v, std::size_t n,
                      double lr, double b1, double b2, double eps, double bc1, double bc2) {
  for (std::size_t k = 0; k < n; ++k) {
    m[k] = b1 * m[k] + (1.0 - b1) * g[k];
    v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
    const double mhat = m[k] * bc1;
    const double vhat = v[k] * bc2;
    p[k] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops table = {
      dot_scalar,      squared_distance_scalar, axpy_scalar,
      scale_scalar,    hadamard_scalar,         relu_scalar,
      relu_backward_scalar, adam_step_scalar,
  };
  return table;
}

}  // namespace mtml::kernels
