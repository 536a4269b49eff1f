#include <cstdlib>
#include <cstring>

#include "fixseeker/kernels.hpp"

namespace fixseeker::kernels {

#if defined(FIXSEEKER_HAVE_AVX2)
const Table* avx2_table();
#endif
#if defined(FIXSEEKER_HAVE_NEON)
const Table* neon_table();
#endif

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

const Table kScalar{"scalar", dot_scalar, axpy_scalar, scale_scalar};

const Table& pick() {
  const char* force = std::getenv("FIXSEEKER_KERNELS");
  const auto all = available();
  if (force && *force) {
    for (const Table* t : all)
      if (std::strcmp(t->name, force) == 0) return *t;
    return kScalar;
  }
  return *all.back();
}

}  // namespace

const Table& scalar() { return kScalar; }

std::vector<const Table*> available() {
  std::vector<const Table*> out{&kScalar};
#if defined(FIXSEEKER_HAVE_AVX2)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) out.push_back(avx2_table());
#endif
#if defined(FIXSEEKER_HAVE_NEON)
  out.push_back(neon_table());
#endif
  return out;
}

const Table& active() {
  static const Table& chosen = pick();
  return chosen;
}

}  // namespace fixseeker::kernels
