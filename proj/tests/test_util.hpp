#pragma once

#include "trgd/rng.hpp"
#include "trgd/tensor.hpp"
#include "trgd/tucker.hpp"

#include <random>

namespace trgd::testutil {

inline Tensor random_tensor(const Shape& shape, RngStream& rng, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Vector v(shape_size(shape));
    for (Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
    return Tensor(shape, std::move(v));
}

inline Matrix random_matrix(Index rows, Index cols, RngStream& rng, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
}

inline Matrix random_orthonormal(Index rows, Index cols, RngStream& rng) {
    const Matrix g = random_matrix(rows, cols, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    return qr.householderQ() * Matrix::Identity(rows, cols);
}

inline TuckerFactors random_factors(const Shape& dims, const Shape& ranks, RngStream& rng) {
    TuckerFactors f;
    f.core = random_tensor(ranks, rng);
    for (size_t k = 0; k < dims.size(); ++k) f.factors.push_back(random_matrix(dims[k], ranks[k], rng));
    return f;
}

inline double rel_err(double got, double want) {
    const double denom = std::max(std::abs(want), 1e-300);
    return std::abs(got - want) / denom;
}

}  // namespace trgd::testutil
