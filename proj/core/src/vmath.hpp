#pragma once

#include <cstddef>

namespace levybel::vmath {

// exp and log applied in place over an array, through the vector math
// library where the toolchain has one. Results may differ from std::exp and
// std::log in the last bits, but never between runs on the same machine.
void exp_inplace(double* x, std::size_t n);
void log_inplace(double* x, std::size_t n);

}  // namespace levybel::vmath
