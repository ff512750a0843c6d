// Elementwise sine and cosine. With AVX2 every element, including a padded tail, goes
// through glibc's 4-lane vector routines, so a value never depends on its position in the
// array; without AVX2 the scalar libm functions are used throughout.

#include <algorithm>
#include <cmath>
#include <cstddef>

#if defined(__AVX2__) && defined(__GLIBC__)
#include <immintrin.h>
#define NSH_VECTOR_TRIG 1
extern "C" __m256d _ZGVdN4v_sin(__m256d);
extern "C" __m256d _ZGVdN4v_cos(__m256d);
#endif

#include "jet_kernels.hpp"

namespace nsh::detail {

namespace {

#if NSH_VECTOR_TRIG
template <typename Kernel>
void blocked(const double* x, double* y, std::size_t n, Kernel kernel) {
  constexpr std::size_t kLanes = 4;
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) _mm256_storeu_pd(y + i, kernel(_mm256_loadu_pd(x + i)));
  if (i == n) return;
  alignas(32) double buf[kLanes] = {};
  std::copy(x + i, x + n, buf);
  _mm256_store_pd(buf, kernel(_mm256_load_pd(buf)));
  std::copy(buf, buf + (n - i), y + i);
}
#endif

}  // namespace

void vector_sin(const double* x, double* y, std::size_t n) {
#if NSH_VECTOR_TRIG
  blocked(x, y, n, [](__m256d v) { return _ZGVdN4v_sin(v); });
#else
  for (std::size_t i = 0; i < n; ++i) y[i] = std::sin(x[i]);
#endif
}

void vector_cos(const double* x, double* y, std::size_t n) {
#if NSH_VECTOR_TRIG
  blocked(x, y, n, [](__m256d v) { return _ZGVdN4v_cos(v); });
#else
  for (std::size_t i = 0; i < n; ++i) y[i] = std::cos(x[i]);
#endif
}

}  // namespace nsh::detail
