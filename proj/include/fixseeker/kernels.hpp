#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace fixseeker::kernels {

// Dense inner loops. Every variant computes the same quantities; vector
// variants reassociate sums, so results agree with the scalar reference to
// rounding, not bit for bit.
struct Table {
  const char* name;
  double (*dot)(const double* x, const double* y, std::size_t n);
  void (*axpy)(double a, const double* x, double* y, std::size_t n);  // y += a*x
  void (*scale)(double a, double* x, std::size_t n);                  // x *= a
};

const Table& scalar();
/// Variants compiled into this binary and supported by the running CPU,
/// scalar first.
std::vector<const Table*> available();
/// Best available variant, or scalar when FIXSEEKER_KERNELS=scalar.
const Table& active();

inline double dot(const double* x, const double* y, std::size_t n) { return active().dot(x, y, n); }
inline void axpy(double a, const double* x, double* y, std::size_t n) { active().axpy(a, x, y, n); }
inline void scale(double a, double* x, std::size_t n) { active().scale(a, x, n); }

}  // namespace fixseeker::kernels
