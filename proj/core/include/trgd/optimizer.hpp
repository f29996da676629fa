#pragma once

#include "trgd/gradients.hpp"
#include "trgd/tucker.hpp"

#include <optional>
#include <variant>

namespace trgd {

enum class ModelKind { linear, logistic, pca };

using ProblemData = std::variant<RegressionData, LogisticData, PcaData>;

struct OptimizerConfig {
    double a = 1.0;       // regularization weight, >= 0
    double b = 1.0;       // balance scale, > 0
    double eta = 1e-3;    // step size, > 0
    TruncationLevel tau;  // +inf reproduces vanilla gradient descent
    int iters = 300;      // T >= 1
    bool record_trajectory = true;

    // Huber comparator: when set, gradients truncate the residual at this
    // level instead of truncating gradient entries (linear and pca only).
    std::optional<double> huber_nu;

    // Gauss-Seidel experimentation flag: refresh gradients after each block
    // update instead of the one-shot simultaneous update of the listing.
    bool sequential_updates = false;

    int convergence_window = 50;

    void validate() const;
};

struct FitReport {
    TuckerFactors final;
    std::vector<double> traj_err_sq;  // ||A^(t) - A*||_F^2, t = 0..T, when truth given
    bool converged = false;
    double conv_stat = std::numeric_limits<double>::quiet_NaN();
    double conv_threshold = std::numeric_limits<double>::quiet_NaN();
    bool diverged = false;  // NaN/Inf hit; `final` is the last finite iterate
    int iters_run = 0;
};

// One simultaneous update of all blocks from the current state:
//   U_k <- U_k - eta G_k - eta a U_k (U_k^T U_k - b^2 I),  S <- S - eta G_0.
TuckerFactors rgd_step(const TuckerFactors& f, const GradientSet& g, const OptimizerConfig& cfg);

// Runs `iters` robust gradient descent steps from f0. The convergence flag
// follows the trajectory rule: sample standard deviation of the last
// `convergence_window` squared errors below p_max log(p_max) / (100 n).
FitReport rgd_fit(const TuckerFactors& f0, const ProblemData& data, ModelKind model, const OptimizerConfig& cfg,
                  const GroundTruth* truth = nullptr);

}  // namespace trgd
