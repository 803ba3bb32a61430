#ifndef DRFD_TEST_UTIL_HPP
#define DRFD_TEST_UTIL_HPP

#include <random>

#include "drfd/ambiguity.hpp"

namespace testutil {

using drfd::Matrix;
using drfd::Vector;

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = g(rng);
    return m;
}

inline Matrix random_symmetric(std::mt19937_64& rng, Eigen::Index n) {
    Matrix a = random_matrix(rng, n, n);
    return 0.5 * (a + a.transpose());
}

/// Random PSD matrix with smallest eigenvalue >= ridge.
inline Matrix random_psd(std::mt19937_64& rng, Eigen::Index n, double ridge = 0.0) {
    Matrix a = random_matrix(rng, n, n);
    return a * a.transpose() / double(n) + ridge * Matrix::Identity(n, n);
}

inline Matrix random_pd(std::mt19937_64& rng, Eigen::Index n) {
    return random_psd(rng, n, 0.1);
}

}  // namespace testutil

#endif
