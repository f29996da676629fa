#pragma once

#include "trgd/rng.hpp"
#include "trgd/tensor.hpp"
#include "trgd/tucker.hpp"

#include <optional>

namespace trgd {

// Covariate/response pairs for the tensor linear model; the first d0 modes
// of the coefficient tensor are covariate modes, the rest response modes.
struct RegressionData {
    int d0 = 0;
    std::vector<Tensor> xs;
    std::vector<Tensor> ys;

    size_t n() const { return xs.size(); }
};

struct LogisticData {
    std::vector<Tensor> xs;
    std::vector<int> ys;  // labels in {0, 1}

    size_t n() const { return xs.size(); }
};

struct PcaData {
    std::vector<Tensor> ys;

    size_t n() const { return ys.size(); }
};

// Entry distribution of covariates or noise. student_t uses dof = 2 + 2*lambda
// (covariates) or 1 + epsilon (noise); gaussian_correlated draws jointly from
// N(0, kron_j Sigma_theta); gaussian_equicorr draws the full vectorization from
// N(0, (1-rho) I + rho 11^T), the covariance family of the directional
// local-moment example.
struct DistSpec {
    enum class Family { gaussian_iid, student_t, gaussian_correlated, gaussian_equicorr };

    Family family = Family::gaussian_iid;
    double dof = 3.0;     // student_t only, must be > 1
    double theta = 0.0;   // gaussian_correlated only, in [0, pi/2]
    double rho = 0.5;     // gaussian_equicorr only, in [0, 1)
    double scale = 1.0;

    static DistSpec gaussian(double scale = 1.0) { return {Family::gaussian_iid, 3.0, 0.0, 0.5, scale}; }
    static DistSpec student(double dof, double scale = 1.0) { return {Family::student_t, dof, 0.0, 0.5, scale}; }
    static DistSpec correlated(double theta, double scale = 1.0) {
        return {Family::gaussian_correlated, 3.0, theta, 0.5, scale};
    }
    static DistSpec equicorr(double rho, double scale = 1.0) { return {Family::gaussian_equicorr, 3.0, 0.0, rho, scale}; }

    void validate() const;
};

// Standard Student-t draw via the normal / chi-square ratio; dof > 1.
double sample_student_t(double dof, RngStream& rng);

// Sigma_theta = 0.5 I_p + 0.5 v v^T with v = sin(theta) 1 + cos(theta) w and
// w = (1,-1,1,-1,...); requires even p so that 1 and w are orthogonal.
Matrix sigma_theta(double theta, Index p);

// Fills a tensor of the given shape with one draw from the spec. Correlated
// draws apply the per-mode Cholesky of Sigma_theta through mode products.
Tensor sample_tensor(const Shape& shape, const DistSpec& spec, RngStream& rng);

RegressionData generate_regression(const GroundTruth& truth, size_t n, const DistSpec& x_dist,
                                   const DistSpec& e_dist, int d0, RngStream& rng);

LogisticData generate_logistic(const GroundTruth& truth, size_t n, const DistSpec& x_dist, RngStream& rng);

PcaData generate_pca(const GroundTruth& truth, size_t n, const DistSpec& e_dist, RngStream& rng);

// Numerically stable logistic helpers shared by generators and gradients.
double sigmoid(double t);
double log1p_exp(double t);  // log(1 + e^t)

}  // namespace trgd
