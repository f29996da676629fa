#include "trgd/tucker.hpp"

#include <Eigen/SVD>

#include <algorithm>

#include <cmath>
#include <stdexcept>

namespace trgd {

Shape TuckerFactors::full_shape() const {
    Shape s;
    s.reserve(factors.size());
    for (const Matrix& u : factors) s.push_back(u.rows());
    return s;
}

void TuckerFactors::validate() const {
    if (static_cast<int>(factors.size()) != core.order())
        throw std::invalid_argument("factor count does not match core order");
    for (int k = 0; k < core.order(); ++k) {
        if (factors[static_cast<size_t>(k)].cols() != core.dim(k))
            throw std::invalid_argument("factor column count does not match core rank");
    }
}

Tensor reconstruct(const TuckerFactors& f) {
    f.validate();
    Tensor t = f.core;
    for (int k = 0; k < f.order(); ++k) t = mode_product(t, f.factors[static_cast<size_t>(k)], k);
    return t;
}

void canonicalize_signs(Matrix& u) {
    for (Index c = 0; c < u.cols(); ++c) {
        Index imax = 0;
        u.col(c).cwiseAbs().maxCoeff(&imax);
        if (u(imax, c) < 0) u.col(c) = -u.col(c);
    }
}

namespace {

Matrix top_left_singular_vectors(const Matrix& m, Index r) {
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU);
    Matrix u = svd.matrixU().leftCols(r);
    canonicalize_signs(u);
    return u;
}

void check_ranks(const Tensor& t, const Shape& ranks) {
    if (static_cast<int>(ranks.size()) != t.order()) throw std::invalid_argument("rank list order mismatch");
    for (int k = 0; k < t.order(); ++k) {
        const Index r = ranks[static_cast<size_t>(k)];
        if (r < 1 || r > t.dim(k)) throw std::invalid_argument("rank exceeds dimension");
    }
}

Tensor project_all(const Tensor& t, const std::vector<Matrix>& us) {
    Tensor s = t;
    for (int k = 0; k < t.order(); ++k) s = mode_product(s, us[static_cast<size_t>(k)].transpose(), k);
    return s;
}

}  // namespace

TuckerFactors hosvd(const Tensor& t, const Shape& ranks) {
    check_ranks(t, ranks);
    const int d = t.order();
    std::vector<Matrix> us(static_cast<size_t>(d));
    for (int k = 0; k < d; ++k) us[static_cast<size_t>(k)] = top_left_singular_vectors(matricize(t, k), ranks[static_cast<size_t>(k)]);
    return TuckerFactors{project_all(t, us), std::move(us)};
}

TuckerFactors hooi(const Tensor& t, const Shape& ranks, int max_sweeps, double tol) {
    if (max_sweeps < 1) throw std::invalid_argument("hooi requires at least one sweep");
    TuckerFactors f = hosvd(t, ranks);
    const int d = t.order();
    const double tnorm = frobenius_norm(t);
    double prev_res = frobenius_norm(t) > 0 ? [&] {
        Tensor diff = t;
        diff.flat() -= reconstruct(f).flat();
        return frobenius_norm(diff);
    }() : 0.0;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        for (int k = 0; k < d; ++k) {
            Tensor proj = t;
            for (int j = 0; j < d; ++j) {
                if (j == k) continue;
                proj = mode_product(proj, f.factors[static_cast<size_t>(j)].transpose(), j);
            }
            f.factors[static_cast<size_t>(k)] = top_left_singular_vectors(matricize(proj, k), ranks[static_cast<size_t>(k)]);
        }
        f.core = project_all(t, f.factors);
        Tensor diff = t;
        diff.flat() -= reconstruct(f).flat();
        const double res = frobenius_norm(diff);
        const double denom = std::max(tnorm, 1e-300);
        if (prev_res - res < tol * denom) {
            prev_res = res;
            break;
        }
        prev_res = res;
    }
    return f;
}

GroundTruth GroundTruth::balanced(const TuckerFactors& raw, double b) {
    if (b <= 0) throw std::invalid_argument("balance scale b must be positive");
    raw.validate();
    const int d = raw.order();
    GroundTruth gt;
    gt.b = b;
    gt.factors.core = raw.core;
    gt.factors.factors.resize(static_cast<size_t>(d));
    for (int k = 0; k < d; ++k) {
        const Matrix& u = raw.factors[static_cast<size_t>(k)];
        Eigen::HouseholderQR<Matrix> qr(u);
        Matrix q = qr.householderQ() * Matrix::Identity(u.rows(), u.cols());
        Matrix r = q.transpose() * u;  // thin R, possibly with negative diagonal
        // flip so R has a nonnegative diagonal; deterministic orientation
        for (Index c = 0; c < r.rows(); ++c) {
            if (r(c, c) < 0) {
                q.col(c) = -q.col(c);
                r.row(c) = -r.row(c);
            }
        }
        gt.factors.factors[static_cast<size_t>(k)] = b * q;
        gt.factors.core = mode_product(gt.factors.core, r / b, k);
    }
    const Tensor a = reconstruct(gt.factors);
    gt.sigma_bar = 0.0;
    gt.sigma_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < d; ++k) {
        Eigen::BDCSVD<Matrix> svd(matricize(a, k));
        const auto& sv = svd.singularValues();
        gt.sigma_bar = std::max(gt.sigma_bar, sv(0));
        gt.sigma_min = std::min(gt.sigma_min, sv(raw.core.dim(k) - 1));
    }
    return gt;
}

double err_metric(const TuckerFactors& f, const GroundTruth& truth) {
    f.validate();
    if (f.ranks() != truth.factors.ranks() || f.full_shape() != truth.factors.full_shape())
        throw std::invalid_argument("err_metric rank or shape mismatch");
    const int d = f.order();

    // Rank-1 components: the orthogonal group per mode is {-1, +1}, so the
    // joint minimum over rotations is an exact enumeration of sign patterns.
    const Shape ranks = f.ranks();
    const bool rank1 = std::all_of(ranks.begin(), ranks.end(), [](Index r) { return r == 1; });
    if (rank1 && d <= 20) {
        double best = std::numeric_limits<double>::infinity();
        for (unsigned mask = 0; mask < (1u << d); ++mask) {
            double err = 0.0;
            double core_sign = 1.0;
            for (int k = 0; k < d; ++k) {
                const double s = (mask >> k) & 1u ? -1.0 : 1.0;
                core_sign *= s;
                err += (f.factors[static_cast<size_t>(k)] - s * truth.factors.factors[static_cast<size_t>(k)])
                           .squaredNorm();
            }
            const double dc = f.core[0] - core_sign * truth.factors.core[0];
            err += dc * dc;
            best = std::min(best, err);
        }
        return best;
    }

    // General ranks: per-mode Procrustes on the factors with the core
    // counter-rotated, an upper bound of the joint minimum.
    double err = 0.0;
    Tensor core_star = truth.factors.core;
    for (int k = 0; k < d; ++k) {
        const Matrix& u = f.factors[static_cast<size_t>(k)];
        const Matrix& u_star = truth.factors.factors[static_cast<size_t>(k)];
        Eigen::BDCSVD<Matrix> svd(u_star.transpose() * u, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Matrix o = svd.matrixU() * svd.matrixV().transpose();
        err += (u - u_star * o).squaredNorm();
        core_star = mode_product(core_star, o.transpose(), k);
    }
    Tensor dcore = f.core;
    dcore.flat() -= core_star.flat();
    err += inner_full(dcore, dcore);
    return err;
}

double subspace_angle(const Matrix& u, const Matrix& u_star) {
    if (u.cols() != u_star.cols()) throw std::invalid_argument("subspace_angle column-count mismatch");
    auto orthonormalize = [](const Matrix& m) {
        Eigen::ColPivHouseholderQR<Matrix> qr(m);
        if (qr.rank() < m.cols()) throw std::invalid_argument("subspace_angle: rank-deficient input");
        return Matrix(qr.householderQ() * Matrix::Identity(m.rows(), m.cols()));
    };
    const Matrix q1 = orthonormalize(u);
    const Matrix q2 = orthonormalize(u_star);
    Eigen::BDCSVD<Matrix> svd(q1.transpose() * q2);
    const double c = std::min(1.0, svd.singularValues().minCoeff());
    return std::sqrt(std::max(0.0, 1.0 - c * c));
}

}  // namespace trgd
