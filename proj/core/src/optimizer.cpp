#include "trgd/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace trgd {

void OptimizerConfig::validate() const {
    if (a < 0) throw std::invalid_argument("regularization weight a must be nonnegative");
    if (!(b > 0)) throw std::invalid_argument("balance scale b must be positive");
    if (!(eta > 0)) throw std::invalid_argument("step size eta must be positive");
    if (iters < 1) throw std::invalid_argument("iteration count must be at least 1");
    if (!(tau.tau > 0)) throw std::invalid_argument("truncation level must be positive");
    if (huber_nu && !(*huber_nu > 0)) throw std::invalid_argument("huber threshold must be positive");
    if (convergence_window < 2) throw std::invalid_argument("convergence window must be at least 2");
}

TuckerFactors rgd_step(const TuckerFactors& f, const GradientSet& g, const OptimizerConfig& cfg) {
    TuckerFactors next;
    next.core = f.core;
    next.core.flat() -= cfg.eta * g.core_grad.flat();
    next.factors.reserve(f.factors.size());
    const double b2 = cfg.b * cfg.b;
    for (size_t k = 0; k < f.factors.size(); ++k) {
        const Matrix& u = f.factors[k];
        Matrix upd = u - cfg.eta * g.factor_grads[k];
        if (cfg.a > 0) {
            Matrix gram = u.transpose() * u;
            gram.diagonal().array() -= b2;
            upd.noalias() -= (cfg.eta * cfg.a) * (u * gram);
        }
        next.factors.push_back(std::move(upd));
    }
    return next;
}

namespace {

GradientSet compute_gradients(const TuckerFactors& f, const ProblemData& data, ModelKind model,
                              const OptimizerConfig& cfg, GradientScratch& scratch) {
    switch (model) {
        case ModelKind::linear: {
            const auto& d = std::get<RegressionData>(data);
            if (cfg.huber_nu) return huber_gradients(f, d, *cfg.huber_nu, &scratch);
            return linear_gradients(f, d, cfg.tau, &scratch);
        }
        case ModelKind::logistic: {
            const auto& d = std::get<LogisticData>(data);
            if (cfg.huber_nu) throw std::invalid_argument("huber comparator is not defined for the logistic model");
            return logistic_gradients(f, d, cfg.tau, &scratch);
        }
        case ModelKind::pca: {
            const auto& d = std::get<PcaData>(data);
            if (cfg.huber_nu) return pca_huber_gradients(f, d, *cfg.huber_nu, &scratch);
            return pca_gradients(f, d, cfg.tau, &scratch);
        }
    }
    throw std::logic_error("unreachable");
}

bool finite_state(const TuckerFactors& f) {
    if (!f.core.all_finite()) return false;
    for (const Matrix& u : f.factors)
        if (!u.allFinite()) return false;
    return true;
}

double err_sq_to_truth(const TuckerFactors& f, const Tensor& a_star) {
    Tensor diff = reconstruct(f);
    diff.flat() -= a_star.flat();
    return inner_full(diff, diff);
}

size_t sample_count(const ProblemData& data) {
    return std::visit([](const auto& d) { return d.n(); }, data);
}

}  // namespace

FitReport rgd_fit(const TuckerFactors& f0, const ProblemData& data, ModelKind model, const OptimizerConfig& cfg,
                  const GroundTruth* truth) {
    cfg.validate();
    f0.validate();

    FitReport report;
    GradientScratch scratch;
    TuckerFactors f = f0;
    Tensor a_star;
    const bool track = truth != nullptr;
    if (track) {
        a_star = reconstruct(truth->factors);
        if (cfg.record_trajectory) report.traj_err_sq.reserve(static_cast<size_t>(cfg.iters) + 1);
    }
    auto record = [&](const TuckerFactors& state) {
        if (track && cfg.record_trajectory) report.traj_err_sq.push_back(err_sq_to_truth(state, a_star));
    };
    record(f);

    for (int t = 0; t < cfg.iters; ++t) {
        TuckerFactors prev = f;
        if (cfg.sequential_updates) {
            const int d = f.order();
            for (int k = 0; k <= d; ++k) {
                GradientSet g = compute_gradients(f, data, model, cfg, scratch);
                if (k < d) {
                    const Matrix& u = f.factors[static_cast<size_t>(k)];
                    Matrix gram = u.transpose() * u;
                    gram.diagonal().array() -= cfg.b * cfg.b;
                    f.factors[static_cast<size_t>(k)] -=
                        cfg.eta * g.factor_grads[static_cast<size_t>(k)] + (cfg.eta * cfg.a) * (u * gram);
                } else {
                    f.core.flat() -= cfg.eta * g.core_grad.flat();
                }
            }
        } else {
            GradientSet g = compute_gradients(f, data, model, cfg, scratch);
            f = rgd_step(f, g, cfg);
        }
        if (!finite_state(f)) {
            report.diverged = true;
            report.iters_run = t;
            f = std::move(prev);  // keep the last finite iterate
            break;
        }
        report.iters_run = t + 1;
        record(f);
    }

    // convergence diagnostic over the trajectory tail
    if (track && cfg.record_trajectory && !report.traj_err_sq.empty()) {
        const size_t m = report.traj_err_sq.size();
        const size_t w = std::min<size_t>(static_cast<size_t>(cfg.convergence_window), m);
        if (w >= 2) {
            double mean = 0.0;
            for (size_t i = m - w; i < m; ++i) mean += report.traj_err_sq[i];
            mean /= static_cast<double>(w);
            double ss = 0.0;
            for (size_t i = m - w; i < m; ++i) {
                const double dlt = report.traj_err_sq[i] - mean;
                ss += dlt * dlt;
            }
            report.conv_stat = std::sqrt(ss / static_cast<double>(w - 1));
            double pmax = 1.0;
            for (Index p : f0.full_shape()) pmax = std::max(pmax, static_cast<double>(p));
            report.conv_threshold = pmax * std::log(pmax) / (100.0 * static_cast<double>(sample_count(data)));
            report.converged = !report.diverged && report.conv_stat < report.conv_threshold;
        }
    }

    report.final = std::move(f);
    return report;
}

}  // namespace trgd
