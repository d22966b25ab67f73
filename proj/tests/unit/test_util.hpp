#pragma once

#include <vector>

#include "dsec/nn/matrix.hpp"
#include "dsec/nn/rng.hpp"

namespace dsec::test {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
    Matrix m(rows, cols);
    for (double& v : m.values()) v = rng.normal(0.0, scale);
    return m;
}

/// n points per clump around ±offset on the first axis, unit noise.
inline Matrix two_clumps(std::size_t n, std::size_t dims, double offset, Rng& rng, std::vector<int>* truth = nullptr) {
    Matrix m(2 * n, dims);
    for (std::size_t i = 0; i < 2 * n; ++i) {
        const bool second = i >= n;
        for (std::size_t j = 0; j < dims; ++j) m(i, j) = rng.normal();
        m(i, 0) += second ? offset : -offset;
        if (truth) truth->push_back(second ? 1 : 0);
    }
    return m;
}

} // namespace dsec::test
