#include "dsec/nn/noise.hpp"

#include <cmath>

#include <fmt/format.h>

#include "dsec/error.hpp"

namespace dsec {

Matrix gaussian_corrupt(const Matrix& input, double sigma, Rng& rng) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw DomainError(fmt::format("gaussian_corrupt: sigma must be >= 0, got {}", sigma));
    }
    Matrix out = input;
    if (sigma == 0.0) return out;
    for (double& v : out.values()) v += sigma * rng.normal();
    return out;
}

} // namespace dsec
