#include "vmath.hpp"

#include <cmath>

// Built with -ffast-math -fopenmp-simd so that GCC maps the loops onto
// libmvec. Nothing else lives in this file: the flags stay local to two loops
// over finite inputs.
#if defined(__x86_64__) && defined(__GNUC__) && !defined(__clang__)
#define LEVYBEL_CLONES __attribute__((target_clones("avx2", "default")))
#else
#define LEVYBEL_CLONES
#endif

namespace levybel::vmath {

LEVYBEL_CLONES void exp_inplace(double* x, std::size_t n) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) x[i] = std::exp(x[i]);
}

LEVYBEL_CLONES void log_inplace(double* x, std::size_t n) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) x[i] = std::log(x[i]);
}

}  // namespace levybel::vmath
