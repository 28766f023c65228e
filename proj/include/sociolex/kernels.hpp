#pragma once

#include <cstddef>

// Dense float kernels used by the embedding trainer and the similarity
// queries. Scalar reference implementations always exist; on x86-64 an AVX2
// variant of each kernel is selected at runtime when the CPU supports it.
// The environment variable SOCIOLEX_SIMD (auto|scalar|avx2) overrides the
// selection, which is resolved once before main() runs.
namespace sociolex::kern {

enum class Backend { scalar, avx2 };

Backend active_backend();
const char* backend_name();

// Returns false (and leaves the selection unchanged) if the requested
// backend is not available on this CPU.
bool set_backend(Backend b);
bool avx2_supported();

// Single-precision accumulation, trainer inner loops.
float dot(const float* a, const float* b, std::size_t n);
void axpy(float alpha, const float* x, float* y, std::size_t n);  // y += alpha*x
void scal(float alpha, float* x, std::size_t n);                  // x *= alpha
void add(const float* x, float* y, std::size_t n);                // y += x

// Double accumulation over float vectors, similarity/alignment path.
double dot_acc(const float* a, const float* b, std::size_t n);
double sumsq_acc(const float* a, std::size_t n);

// cos(a, b) with double accumulation. Callers guarantee nonzero norms.
double cosine(const float* a, const float* b, std::size_t n);

namespace detail {
struct Ops {
  float (*dot)(const float*, const float*, std::size_t);
  void (*axpy)(float, const float*, float*, std::size_t);
  void (*scal)(float, float*, std::size_t);
  void (*add)(const float*, float*, std::size_t);
  double (*dot_acc)(const float*, const float*, std::size_t);
  double (*sumsq_acc)(const float*, std::size_t);
};
const Ops& scalar_ops();
#if defined(__x86_64__) || defined(_M_X64)
const Ops& avx2_ops();
#endif
}  // namespace detail

}  // namespace sociolex::kern
