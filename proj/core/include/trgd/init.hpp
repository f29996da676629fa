#pragma once

#include "trgd/data_models.hpp"
#include "trgd/tucker.hpp"

namespace trgd {

struct InitConfig {
    double omega = std::numeric_limits<double>::infinity();        // covariate norm truncation
    double huber_delta = std::numeric_limits<double>::infinity();  // Huber robustness parameter
    double lambda_nuc = 0.0;                                       // nuclear-norm weight
    int prox_iters = 500;
    double prox_step = 0.0;  // 0 selects 1/L with L from power iteration
    double prox_tol = 1e-9;
    bool fista = false;

    void validate() const;
};

// Plug-in tuning: the order formulas with all constants set to one and the
// moment levels estimated from the sample by median-of-means.
InitConfig plugin_linear_init_config(const RegressionData& data, double lambda_hint = 1.0, double epsilon_hint = 1.0);
InitConfig plugin_logistic_init_config(const LogisticData& data, double lambda_hint = 1.0);

// x * min(||x||, omega) / ||x||; zero stays zero.
Vector truncate_vector_norm(const Vector& x, double omega);

struct NuclearHuberResult {
    Matrix a;
    int iters = 0;
    bool converged = false;
    std::vector<double> objectives;  // one per iteration, non-increasing for ISTA
};

// Proximal-gradient minimizer of
//   (1/n) sum_i huber_delta(y_i - A x_i) + lambda_nuc ||A||_nuc
// over A (p_y x p_x); xs and ys hold one sample per column. The prox step is
// singular-value soft-thresholding.
NuclearHuberResult nuclear_huber(const Matrix& xs, const Matrix& ys, const InitConfig& cfg);

// Nuclear-norm regularized logistic regression on pre-unfolded covariates;
// labels in {0,1}. Same solver with the logistic smooth part.
NuclearHuberResult nuclear_logistic(const std::vector<Matrix>& xs, const std::vector<int>& ys, const InitConfig& cfg);

// Covariate truncation + nuclear-norm Huber regression + HOOI, rebalanced to
// the b scale: F0 = (b^-d core, b U_1, ..., b U_d).
TuckerFactors init_linear(const RegressionData& data, const Shape& ranks, const InitConfig& cfg, double b);

// Frobenius-truncated covariates + nuclear-norm logistic regression on the
// most balanced single-mode unfolding + HOOI.
TuckerFactors init_logistic(const LogisticData& data, const Shape& ranks, const InitConfig& cfg, double b);

// HOOI on the entrywise median of the replicates (or the single observation),
// rebalanced to the b scale.
TuckerFactors init_pca(const PcaData& data, const Shape& ranks, double b);

// Unfolding mode minimizing |rows - cols|, ties to the lowest mode.
int balanced_unfolding_mode(const Shape& shape);

}  // namespace trgd
