#include "mtml/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace mtml::kernels {
namespace {

std::atomic<const Ops*> g_active{nullptr};
std::atomic<Backend> g_backend{Backend::scalar};

Backend pick_default() {
  if (const char* env = std::getenv("MTML_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0 && avx2_available()) return Backend::avx2;
  }
  return avx2_available() ? Backend::avx2 : Backend::scalar;
}

void install(Backend b) {
  g_backend.store(b, std::memory_order_relaxed);
#if MTML_HAVE_AVX2_TU
  g_active.store(b == Backend::avx2 ? &avx2_ops() : &scalar_ops(), std::memory_order_release);
#else
  (void)b;
  g_active.store(&scalar_ops(), std::memory_order_release);
#endif
}

}  // namespace

bool avx2_available() {
#if MTML_HAVE_AVX2_TU
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

#if !MTML_HAVE_AVX2_TU
const Ops& avx2_ops() { return scalar_ops(); }
#endif

const Ops& ops() {
  const Ops* t = g_active.load(std::memory_order_acquire);
  if (!t) {
    install(pick_default());
    t = g_active.load(std::memory_order_acquire);
  }
  return *t;
}

Backend active_backend() {
  ops();  // force resolution
  return g_backend.load(std::memory_order_relaxed);
}

bool set_backend(Backend b) {
  if (b == Backend::avx2 && !avx2_available()) return false;
  install(b);
  return true;
}

std::string backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

}  // namespace mtml::kernels
