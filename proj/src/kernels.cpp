#include "sociolex/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>

namespace sociolex::kern {

namespace {

float dot_scalar(const float* a, const float* b, std::size_t n) {
  float s = 0.0f;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(float alpha, const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal_scalar(float alpha, float* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void add_scalar(const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

double dot_acc_scalar(const float* a, const float* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return s;
}

double sumsq_acc_scalar(const float* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += static_cast<double>(a[i]) * static_cast<double>(a[i]);
  }
  return s;
}

struct Selection {
  const detail::Ops* ops;
  Backend backend;
};

Selection resolve_initial() {
#if defined(__x86_64__) || defined(_M_X64)
  const char* env = std::getenv("SOCIOLEX_SIMD");
  const bool want_scalar = env && std::strcmp(env, "scalar") == 0;
  const bool want_avx2 = env && std::strcmp(env, "avx2") == 0;
  if (!want_scalar && (want_avx2 || avx2_supported())) {
    if (avx2_supported()) return {&detail::avx2_ops(), Backend::avx2};
  }
#endif
  return {&detail::scalar_ops(), Backend::scalar};
}

std::atomic<const detail::Ops*> g_ops{nullptr};
std::atomic<Backend> g_backend{Backend::scalar};

const detail::Ops* ops() {
  const detail::Ops* p = g_ops.load(std::memory_order_acquire);
  if (!p) {
    Selection sel = resolve_initial();
    g_backend.store(sel.backend, std::memory_order_relaxed);
    g_ops.store(sel.ops, std::memory_order_release);
    p = sel.ops;
  }
  return p;
}

}  // namespace

namespace detail {
const Ops& scalar_ops() {
  static const Ops k{dot_scalar, axpy_scalar, scal_scalar,
                     add_scalar, dot_acc_scalar, sumsq_acc_scalar};
  return k;
}
}  // namespace detail

bool avx2_supported() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend active_backend() {
  ops();
  return g_backend.load(std::memory_order_relaxed);
}

const char* backend_name() {
  return active_backend() == Backend::avx2 ? "avx2" : "scalar";
}

bool set_backend(Backend b) {
  if (b == Backend::scalar) {
    g_backend.store(Backend::scalar, std::memory_order_relaxed);
    g_ops.store(&detail::scalar_ops(), std::memory_order_release);
    return true;
  }
#if defined(__x86_64__) || defined(_M_X64)
  if (avx2_supported()) {
    g_backend.store(Backend::avx2, std::memory_order_relaxed);
    g_ops.store(&detail::avx2_ops(), std::memory_order_release);
    return true;
  }
#endif
  return false;
}

float dot(const float* a, const float* b, std::size_t n) {
  return ops()->dot(a, b, n);
}

void axpy(float alpha, const float* x, float* y, std::size_t n) {
  ops()->axpy(alpha, x, y, n);
}

void scal(float alpha, float* x, std::size_t n) { ops()->scal(alpha, x, n); }

void add(const float* x, float* y, std::size_t n) { ops()->add(x, y, n); }

double dot_acc(const float* a, const float* b, std::size_t n) {
  return ops()->dot_acc(a, b, n);
}

double sumsq_acc(const float* a, std::size_t n) {
  return ops()->sumsq_acc(a, n);
}

double cosine(const float* a, const float* b, std::size_t n) {
  const double num = dot_acc(a, b, n);
  const double na = sumsq_acc(a, n);
  const double nb = sumsq_acc(b, n);
  return num / std::sqrt(na * nb);
}

}  // namespace sociolex::kern
