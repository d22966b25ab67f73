#pragma once

#include "dsec/nn/matrix.hpp"
#include "dsec/nn/rng.hpp"

namespace dsec {

/// input + N(0, sigma²) elementwise, drawn in row-major order from `rng`.
/// sigma = 0 returns a copy without consuming randomness.
Matrix gaussian_corrupt(const Matrix& input, double sigma, Rng& rng);

} // namespace dsec
