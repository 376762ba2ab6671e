#pragma once

#include <cstddef>
#include <string>

namespace mtml::kernels {

enum class Backend { scalar, avx2 };

// Flat table of the arithmetic inner loops everything else is composed from.
// One table per backend; all functions operate on contiguous double arrays.
struct Ops {
  // sum_k a[k]*b[k]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_k (a[k]-b[k])^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // y[k] += alpha * x[k]
  void (*axpy)(double* y, const double* x, double alpha, std::size_t n);
  // x[k] *= alpha
  void (*scale)(double* x, double alpha, std::size_t n);
  // y[k] *= x[k]
  void (*hadamard)(double* y, const double* x, std::size_t n);
  // out[k] = max(z[k], 0)
  void (*relu)(const double* z, double* out, std::size_t n);
  // out[k] = z[k] > 0 ? up[k] : 0   (subgradient at 0 is 0)
  void (*relu_backward)(const double* z, const double* up, double* out, std::size_t n);
  // bias-corrected Adam step; bc1 = 1/(1-b1^t), bc2 = 1/(1-b2^t)
  void (*adam_step)(double* p, const double* g, double* m, double* v, std::size_t n,
                    double lr, double b1, double b2, double eps, double bc1, double bc2);
};

const Ops& scalar_ops();

// Table compiled with AVX2+FMA; only callable when avx2_available().
const Ops& avx2_ops();

bool avx2_available();

// Active table. Resolved once on first use: AVX2 when the CPU supports it,
// overridable with MTML_KERNELS=scalar|avx2.
const Ops& ops();

Backend active_backend();

// Returns false (and leaves the backend unchanged) if the request cannot be
// honored on this CPU. Intended for tests and the CLI --kernels flag.
bool set_backend(Backend b);

std::string backend_name(Backend b);

}  // namespace mtml::kernels
