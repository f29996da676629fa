#pragma once

#include "trgd/tensor.hpp"

namespace trgd {

// Tucker component tuple F = (core, U_0, ..., U_{d-1}) with U_k of size
// p_k x r_k and core of size r_0 x ... x r_{d-1}.
struct TuckerFactors {
    Tensor core;
    std::vector<Matrix> factors;

    int order() const { return core.order(); }
    Shape ranks() const { return core.shape(); }
    Shape full_shape() const;
    void validate() const;  // throws on rank/shape inconsistencies
};

// Full tensor core x_0 U_0 x_1 U_1 ... x_{d-1} U_{d-1}.
Tensor reconstruct(const TuckerFactors& f);

// Truncated higher-order SVD: U_k = top-r_k left singular vectors of the
// mode-k unfolding, core = t projected onto them.
TuckerFactors hosvd(const Tensor& t, const Shape& ranks);

// Higher-order orthogonal iteration refinement of hosvd. Sweeps until the
// relative improvement of the reconstruction error drops below `tol` or
// `max_sweeps` is reached. Residuals are non-increasing across sweeps.
TuckerFactors hooi(const Tensor& t, const Shape& ranks, int max_sweeps = 50, double tol = 1e-8);

// Reference decomposition with b-balanced factors: U_k^T U_k = b^2 I.
// sigma_bar / sigma_min are the extreme nonzero singular values of the
// reconstruction across all mode unfoldings.
struct GroundTruth {
    TuckerFactors factors;
    double b = 1.0;
    double sigma_bar = 0.0;
    double sigma_min = 0.0;

    double kappa() const { return sigma_bar / sigma_min; }

    // Rebalances an arbitrary decomposition: orthonormalizes each factor,
    // scales it to b, and folds the change of basis into the core.
    static GroundTruth balanced(const TuckerFactors& raw, double b);
};

// Rotation-invariant estimation error: per-mode orthogonal Procrustes
// alignment of the factors, with the core counter-rotated by the same
// rotations. Exact for rank-1 components, an upper bound of the joint
// minimum otherwise.
double err_metric(const TuckerFactors& f, const GroundTruth& truth);

// Sine of the largest principal angle between the column spaces.
double subspace_angle(const Matrix& u, const Matrix& u_star);

// Fixes each column's sign so its largest-magnitude entry is positive.
void canonicalize_signs(Matrix& u);

}  // namespace trgd
