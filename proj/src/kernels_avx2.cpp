// AVX2+FMA kernel variants, 4 doubles per vector. This translation unit is
// compiled with -mavx2 -mfma and must only be entered after the dispatcher
// has confirmed CPU support.

#include "mtml/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace mtml::kernels {
namespace {

inline double hsum(__m256d v) {
  // (v0+v2) + (v1+v3), same combination order every call
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d s = _mm_add_pd(lo, hi);
  __m128d swap = _mm_unpackhi_pd(s, s);
  return _mm_cvtsd_f64(_mm_add_sd(s, swap));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc);
  }
  double total = hsum(acc);
  for (; k < n; ++k) total += a[k] * b[k];
  return total;
}

double squared_distance_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double total = hsum(acc);
  for (; k < n; ++k) {
    const double d = a[k] - b[k];
    total += d * d;
  }
  return total;
}

void axpy_avx2(double* y, const double* x, double alpha, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d vy = _mm256_loadu_pd(y + k);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + k), vy);
    _mm256_storeu_pd(y + k, vy);
  }
  for (; k < n; ++k) y[k] = std::fma(alpha, x[k], y[k]);
}

void scale_avx2(double* x, double alpha, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    _mm256_storeu_pd(x + k, _mm256_mul_pd(_mm256_loadu_pd(x + k), va));
  }
  for (; k < n; ++k) x[k] *= alpha;
}

void hadamard_avx2(double* y, const double* x, std::size_t n) {
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    _mm256_storeu_pd(y + k, _mm256_mul_pd(_mm256_loadu_pd(y + k), _mm256_loadu_pd(x + k)));
  }
  for (; k < n; ++k) y[k] *= x[k];
}

void relu_avx2(const double* z, double* out, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    _mm256_storeu_pd(out + k, _mm256_max_pd(_mm256_loadu_pd(z + k), zero));
  }
  for (; k < n; ++k) out[k] = z[k] > 0.0 ? z[k] : 0.0;
}

void relu_backward_avx2(const double* z, const double* up, double* out, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(z + k), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(out + k, _mm256_and_pd(mask, _mm256_loadu_pd(up + k)));
  }
  for (; k < n; ++k) out[k] = z[k] > 0.0 ? up[k] : 0.0;
}

void adam_step_avx2(double* p, const double* g, double* m, double* v, std::size_t n,
                    double lr, double b1, double b2, double eps, double bc1, double bc2) {
  const __m256d vb1 = _mm256_set1_pd(b1);
  const __m256d vb2 = _mm256_set1_pd(b2);
  const __m256d vc1 = _mm256_set1_pd(1.0 - b1);
  const __m256d vc2 = _mm256_set1_pd(1.0 - b2);
  const __m256d vbc1 = _mm256_set1_pd(bc1);
  const __m256d vbc2 = _mm256_set1_pd(bc2);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d veps = _mm256_set1_pd(eps);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d vg = _mm256_loadu_pd(g + k);
    __m256d vm = _mm256_fmadd_pd(vb1, _mm256_loadu_pd(m + k), _mm256_mul_pd(vc1, vg));
    __m256d vv = _mm256_fmadd_pd(vb2, _mm256_loadu_pd(v + k),
                                 _mm256_mul_pd(vc2, _mm256_mul_pd(vg, vg)));
    _mm256_storeu_pd(m + k, vm);
    _mm256_storeu_pd(v + k, vv);
    const __m256d mhat = _mm256_mul_pd(vm, vbc1);
    const __m256d vhat = _mm256_mul_pd(vv, vbc2);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom);
    _mm256_storeu_pd(p + k, _mm256_sub_pd(_mm256_loadu_pd(p + k), step));
  }
  for (; k < n; ++k) {
    m[k] = std::fma(b1, m[k], (1.0 - b1) * g[k]);
    v[k] = std::fma(b2, v[k], (1.0 - b2) * g[k] * g[k]);
    p[k] -= lr * (m[k] * bc1) / (std::sqrt(v[k] * bc2) + eps);
  }
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops table = {
      dot_avx2,      squared_distance_avx2, axpy_avx2,
      scale_avx2,    hadamard_avx2,         relu_avx2,
      relu_backward_avx2, adam_step_avx2,
  };
  return table;
}

}  // namespace mtml::kernels

#endif  // __AVX2__ && __FMA__
