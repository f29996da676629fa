#pragma once

#include "trgd/data_models.hpp"
#include "trgd/tensor.hpp"
#include "trgd/tucker.hpp"

#include <limits>
#include <memory>

namespace trgd {

// Entrywise truncation threshold; +infinity disables truncation and the
// estimators reduce to plain sample-mean gradients.
struct TruncationLevel {
    double tau = std::numeric_limits<double>::infinity();

    static TruncationLevel infinite() { return {}; }
    static TruncationLevel finite(double t);
    bool is_finite() const { return std::isfinite(tau); }
};

// Partial gradients conforming to a TuckerFactors: one block per factor
// plus the core block.
struct GradientSet {
    Tensor core_grad;
    std::vector<Matrix> factor_grads;
};

Tensor truncate_entrywise(const Tensor& t, TruncationLevel tau);
Matrix truncate_entrywise(const Matrix& m, TruncationLevel tau);

// Reusable per-fit scratch space; gradient calls allocate one internally
// when none is supplied.
class GradientScratch {
public:
    GradientScratch();
    ~GradientScratch();
    GradientScratch(GradientScratch&&) noexcept;
    GradientScratch& operator=(GradientScratch&&) noexcept;

    struct Impl;
    Impl& impl() { return *impl_; }

private:
    std::unique_ptr<Impl> impl_;
};

// Robust partial gradients of the least-squares loss: each sample's
// gradient contribution is entrywise-truncated at tau before averaging.
GradientSet linear_gradients(const TuckerFactors& f, const RegressionData& data, TruncationLevel tau,
                             GradientScratch* scratch = nullptr);

// Robust partial gradients of the logistic negative log-likelihood.
GradientSet logistic_gradients(const TuckerFactors& f, const LogisticData& data, TruncationLevel tau,
                               GradientScratch* scratch = nullptr);

// Robust partial gradients of the reconstruction loss, averaged over the
// observed replicates.
GradientSet pca_gradients(const TuckerFactors& f, const PcaData& data, TruncationLevel tau,
                          GradientScratch* scratch = nullptr);

// Huber comparator: truncates each sample's residual at nu (never the
// covariates), then forms plain averaged gradients.
GradientSet huber_gradients(const TuckerFactors& f, const RegressionData& data, double nu,
                            GradientScratch* scratch = nullptr);

// Residual-truncated analogue of huber_gradients for the PCA model.
GradientSet pca_huber_gradients(const TuckerFactors& f, const PcaData& data, double nu,
                                GradientScratch* scratch = nullptr);

}  // namespace trgd
