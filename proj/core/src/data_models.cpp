#include "trgd/data_models.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace trgd {

void DistSpec::validate() const {
    if (scale < 0) throw std::invalid_argument("distribution scale must be nonnegative");
    switch (family) {
        case Family::student_t:
            if (dof <= 1.0) throw std::invalid_argument("student_t requires dof > 1");
            break;
        case Family::gaussian_correlated:
            if (theta < 0.0 || theta > std::numbers::pi / 2 + 1e-12)
                throw std::invalid_argument("gaussian_correlated requires theta in [0, pi/2]");
            break;
        case Family::gaussian_equicorr:
            if (rho < 0.0 || rho >= 1.0) throw std::invalid_argument("gaussian_equicorr requires rho in [0, 1)");
            break;
        case Family::gaussian_iid:
            break;
    }
}

double sample_student_t(double dof, RngStream& rng) {
    if (dof <= 1.0) throw std::invalid_argument("student_t requires dof > 1");
    std::normal_distribution<double> normal(0.0, 1.0);
    std::chi_squared_distribution<double> chi2(dof);
    const double z = normal(rng);
    const double w = chi2(rng);
    return z / std::sqrt(w / dof);
}

Matrix sigma_theta(double theta, Index p) {
    if (p % 2 != 0) throw std::invalid_argument("sigma_theta requires even dimension");
    Vector w(p);
    for (Index i = 0; i < p; ++i) w[i] = (i % 2 == 0) ? 1.0 : -1.0;
    const Vector v = std::sin(theta) * Vector::Ones(p) + std::cos(theta) * w;
    return 0.5 * Matrix::Identity(p, p) + 0.5 * v * v.transpose();
}

namespace {

Matrix cholesky_lower(const Matrix& sigma) {
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) throw std::runtime_error("covariance is not positive definite");
    return llt.matrixL();
}

}  // namespace

Tensor sample_tensor(const Shape& shape, const DistSpec& spec, RngStream& rng) {
    spec.validate();
    const Index n = shape_size(shape);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector buf(n);
    switch (spec.family) {
        case DistSpec::Family::gaussian_iid:
            for (Index i = 0; i < n; ++i) buf[i] = spec.scale * normal(rng);
            return make_unchecked(shape, std::move(buf));
        case DistSpec::Family::student_t:
            for (Index i = 0; i < n; ++i) buf[i] = spec.scale * sample_student_t(spec.dof, rng);
            return make_unchecked(shape, std::move(buf));
        case DistSpec::Family::gaussian_correlated: {
            for (Index i = 0; i < n; ++i) buf[i] = normal(rng);
            Tensor t = make_unchecked(shape, std::move(buf));
            for (int k = 0; k < t.order(); ++k) {
                const Matrix l = cholesky_lower(sigma_theta(spec.theta, t.dim(k)));
                t = mode_product(t, l, k);
            }
            t.flat() *= spec.scale;
            return t;
        }
        case DistSpec::Family::gaussian_equicorr: {
            // x = sqrt(1-rho) g + sqrt(rho) h 1 has covariance (1-rho)I + rho 11^T
            const double h = normal(rng);
            const double a = std::sqrt(1.0 - spec.rho);
            const double b = std::sqrt(spec.rho);
            for (Index i = 0; i < n; ++i) buf[i] = spec.scale * (a * normal(rng) + b * h);
            return make_unchecked(shape, std::move(buf));
        }
    }
    throw std::logic_error("unreachable");
}

RegressionData generate_regression(const GroundTruth& truth, size_t n, const DistSpec& x_dist,
                                   const DistSpec& e_dist, int d0, RngStream& rng) {
    const Shape full = truth.factors.full_shape();
    if (d0 < 0 || d0 > static_cast<int>(full.size()))
        throw std::invalid_argument("covariate order d0 out of range");
    const Shape x_shape(full.begin(), full.begin() + d0);
    const Shape y_shape(full.begin() + d0, full.end());
    const Tensor a_star = reconstruct(truth.factors);

    RegressionData data;
    data.d0 = d0;
    data.xs.reserve(n);
    data.ys.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        Tensor x = sample_tensor(x_shape, x_dist, rng);
        Tensor e = sample_tensor(y_shape, e_dist, rng);
        Tensor y = inner_generalized(a_star, x);
        y.flat() += e.flat();
        data.xs.push_back(std::move(x));
        data.ys.push_back(std::move(y));
    }
    return data;
}

LogisticData generate_logistic(const GroundTruth& truth, size_t n, const DistSpec& x_dist, RngStream& rng) {
    const Shape full = truth.factors.full_shape();
    const Tensor a_star = reconstruct(truth.factors);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    LogisticData data;
    data.xs.reserve(n);
    data.ys.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        Tensor x = sample_tensor(full, x_dist, rng);
        const double p = sigmoid(inner_full(x, a_star));
        data.ys.push_back(unif(rng) < p ? 1 : 0);
        data.xs.push_back(std::move(x));
    }
    return data;
}

PcaData generate_pca(const GroundTruth& truth, size_t n, const DistSpec& e_dist, RngStream& rng) {
    const Shape full = truth.factors.full_shape();
    const Tensor a_star = reconstruct(truth.factors);
    PcaData data;
    data.ys.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        Tensor y = sample_tensor(full, e_dist, rng);
        y.flat() += a_star.flat();
        data.ys.push_back(std::move(y));
    }
    return data;
}

double sigmoid(double t) {
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

double log1p_exp(double t) {
    if (t > 0) return t + std::log1p(std::exp(-t));
    return std::log1p(std::exp(t));
}

}  // namespace trgd
