#include "trgd/init.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trgd {

void InitConfig::validate() const {
    if (!(omega > 0) || !(huber_delta > 0)) throw std::invalid_argument("init truncation levels must be positive");
    if (lambda_nuc < 0) throw std::invalid_argument("nuclear-norm weight must be nonnegative");
    if (prox_iters < 1 || !(prox_tol > 0) || prox_step < 0) throw std::invalid_argument("invalid prox solver controls");
}

Vector truncate_vector_norm(const Vector& x, double omega) {
    if (!(omega > 0)) throw std::invalid_argument("omega must be positive");
    const double n = x.norm();
    if (n <= omega || n == 0.0) return x;
    return x * (omega / n);
}

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid) - 1, v.end());
    return 0.5 * (hi + v[mid - 1]);
}

// median-of-means over blocks of per-sample statistics
double median_of_means(const std::vector<double>& stats, size_t blocks = 10) {
    blocks = std::max<size_t>(1, std::min(blocks, stats.size()));
    const size_t per = stats.size() / blocks;
    std::vector<double> means;
    means.reserve(blocks);
    for (size_t b = 0; b < blocks; ++b) {
        const size_t lo = b * per;
        const size_t hi = (b + 1 == blocks) ? stats.size() : lo + per;
        double m = 0.0;
        for (size_t i = lo; i < hi; ++i) m += stats[i];
        means.push_back(m / static_cast<double>(hi - lo));
    }
    return median_of(std::move(means));
}

Matrix svt(const Matrix& m, double level) {
    if (level <= 0) return m;
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vector s = svd.singularValues();
    for (Index i = 0; i < s.size(); ++i) s[i] = std::max(0.0, s[i] - level);
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

double nuclear_norm(const Matrix& m) {
    Eigen::BDCSVD<Matrix> svd(m);
    return svd.singularValues().sum();
}

double power_iteration_lmax(const std::function<Vector(const Vector&)>& apply, Index dim, int iters = 60) {
    Vector v = Vector::Ones(dim) / std::sqrt(static_cast<double>(dim));
    double lmax = 1.0;
    for (int i = 0; i < iters; ++i) {
        Vector w = apply(v);
        const double n = w.norm();
        if (n == 0) return 1.0;
        lmax = n;
        v = w / n;
    }
    return lmax;
}

// Shared ISTA/FISTA loop with singular-value soft-thresholding prox.
NuclearHuberResult prox_solve(Index rows, Index cols, const InitConfig& cfg,
                              const std::function<double(const Matrix&)>& smooth_obj,
                              const std::function<Matrix(const Matrix&)>& smooth_grad, double lipschitz) {
    // small margin on L: power iteration approaches the top eigenvalue from below
    const double step = cfg.prox_step > 0 ? cfg.prox_step : 1.0 / std::max(1.05 * lipschitz, 1e-12);
    NuclearHuberResult res;
    Matrix a = Matrix::Zero(rows, cols);
    Matrix z = a;  // FISTA extrapolation point
    double t_mom = 1.0;
    double obj = smooth_obj(a) + cfg.lambda_nuc * nuclear_norm(a);
    res.objectives.push_back(obj);
    for (int it = 0; it < cfg.prox_iters; ++it) {
        const Matrix& base = cfg.fista ? z : a;
        Matrix next = svt(base - step * smooth_grad(base), step * cfg.lambda_nuc);
        const double next_obj = smooth_obj(next) + cfg.lambda_nuc * nuclear_norm(next);
        if (cfg.fista) {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_mom * t_mom));
            z = next + ((t_mom - 1.0) / t_next) * (next - a);
            t_mom = t_next;
            a = std::move(next);
        } else {
            // ISTA with step 1/L is monotone; keep the better iterate anyway
            if (next_obj > obj) {
                res.iters = it + 1;
                break;
            }
            a = std::move(next);
        }
        res.iters = it + 1;
        const double rel = std::fabs(obj - next_obj) / std::max(1.0, std::fabs(obj));
        res.objectives.push_back(next_obj);
        obj = next_obj;
        if (rel < cfg.prox_tol) {
            res.converged = true;
            break;
        }
    }
    res.a = std::move(a);
    return res;
}

}  // namespace

NuclearHuberResult nuclear_huber(const Matrix& xs, const Matrix& ys, const InitConfig& cfg) {
    cfg.validate();
    const Index n = xs.cols();
    if (n == 0 || ys.cols() != n) throw std::invalid_argument("nuclear_huber requires matching nonempty samples");
    const Index px = xs.rows();
    const Index py = ys.rows();
    const double delta = cfg.huber_delta;

    auto huber_value = [delta](double r) {
        const double ar = std::fabs(r);
        return ar <= delta ? 0.5 * r * r : delta * ar - 0.5 * delta * delta;
    };
    auto smooth_obj = [&](const Matrix& a) {
        double acc = 0.0;
        for (Index i = 0; i < n; ++i) {
            const Vector r = ys.col(i) - a * xs.col(i);
            for (Index j = 0; j < py; ++j) acc += huber_value(r[j]);
        }
        return acc / static_cast<double>(n);
    };
    auto smooth_grad = [&](const Matrix& a) {
        Matrix resid = ys - a * xs;  // py x n
        for (Index i = 0; i < resid.size(); ++i) {
            double& r = resid.data()[i];
            r = r > delta ? delta : (r < -delta ? -delta : r);
        }
        return Matrix(-(resid * xs.transpose()) / static_cast<double>(n));
    };
    const double lmax = power_iteration_lmax(
        [&](const Vector& v) { return Vector((xs * (xs.transpose() * v)) / static_cast<double>(n)); }, px);
    return prox_solve(py, px, cfg, smooth_obj, smooth_grad, lmax);
}

NuclearHuberResult nuclear_logistic(const std::vector<Matrix>& xs, const std::vector<int>& ys, const InitConfig& cfg) {
    cfg.validate();
    if (xs.empty() || xs.size() != ys.size()) throw std::invalid_argument("nuclear_logistic requires matching samples");
    const Index rows = xs[0].rows();
    const Index cols = xs[0].cols();
    const double n = static_cast<double>(xs.size());

    auto smooth_obj = [&](const Matrix& a) {
        double acc = 0.0;
        for (size_t i = 0; i < xs.size(); ++i) {
            const double s = (xs[i].array() * a.array()).sum();
            acc += log1p_exp(s) - static_cast<double>(ys[i]) * s;
        }
        return acc / n;
    };
    auto smooth_grad = [&](const Matrix& a) {
        Matrix g = Matrix::Zero(rows, cols);
        for (size_t i = 0; i < xs.size(); ++i) {
            const double s = (xs[i].array() * a.array()).sum();
            g += (sigmoid(s) - static_cast<double>(ys[i])) * xs[i];
        }
        return Matrix(g / n);
    };
    const double lmax = power_iteration_lmax(
        [&](const Vector& v) {
            Vector out = Vector::Zero(v.size());
            for (const Matrix& x : xs) {
                Eigen::Map<const Vector> xv(x.data(), x.size());
                out += xv * (xv.dot(v));
            }
            return Vector(out / (4.0 * n));
        },
        rows * cols);
    return prox_solve(rows, cols, cfg, smooth_obj, smooth_grad, lmax);
}

namespace {

// HOOI on a full-tensor estimate followed by the b-rebalance.
TuckerFactors rebalance_from_tensor(const Tensor& a_hat, const Shape& ranks, double b) {
    const int d = static_cast<int>(ranks.size());
    TuckerFactors f = hooi(a_hat, ranks);
    f.core.flat() *= std::pow(b, -d);
    for (Matrix& u : f.factors) u *= b;
    return f;
}

}  // namespace

TuckerFactors init_linear(const RegressionData& data, const Shape& ranks, const InitConfig& cfg, double b) {
    if (data.xs.empty()) throw std::invalid_argument("init_linear requires data");
    const Index px = data.xs[0].size();
    const Index py = data.ys[0].size();
    const Index n = static_cast<Index>(data.n());
    Matrix xs(px, n), ys(py, n);
    for (Index i = 0; i < n; ++i) {
        xs.col(i) = truncate_vector_norm(data.xs[static_cast<size_t>(i)].flat(), cfg.omega);
        ys.col(i) = data.ys[static_cast<size_t>(i)].flat();
    }
    const NuclearHuberResult sol = nuclear_huber(xs, ys, cfg);

    // vec(Y) = mat(A) vec(X) puts covariate modes on columns; the canonical
    // tensor buffer is the column-major flattening of mat(A)^T
    Shape full;
    for (int k = 0; k < data.d0; ++k) full.push_back(data.xs[0].dim(k));
    for (int k = 0; k < data.ys[0].order(); ++k) full.push_back(data.ys[0].dim(k));
    Matrix mt = sol.a.transpose();  // px x py
    Tensor a_hat = make_unchecked(full, Eigen::Map<const Vector>(mt.data(), mt.size()));
    return rebalance_from_tensor(a_hat, ranks, b);
}

TuckerFactors init_logistic(const LogisticData& data, const Shape& ranks, const InitConfig& cfg, double b) {
    if (data.xs.empty()) throw std::invalid_argument("init_logistic requires data");
    const Shape shape = data.xs[0].shape();
    const int mode = balanced_unfolding_mode(shape);
    std::vector<Matrix> xs;
    xs.reserve(data.n());
    for (const Tensor& x : data.xs) {
        Matrix m = matricize(x, mode);
        Eigen::Map<Vector> mv(m.data(), m.size());
        mv = truncate_vector_norm(mv, cfg.omega);
        xs.push_back(std::move(m));
    }
    const NuclearHuberResult sol = nuclear_logistic(xs, data.ys, cfg);
    Tensor a_hat = dematricize(sol.a, mode, shape);
    return rebalance_from_tensor(a_hat, ranks, b);
}

TuckerFactors init_pca(const PcaData& data, const Shape& ranks, double b) {
    if (data.ys.empty()) throw std::invalid_argument("init_pca requires data");
    const size_t n = data.n();
    Tensor med = data.ys[0];
    if (n > 1) {
        std::vector<double> col(n);
        for (Index j = 0; j < med.size(); ++j) {
            for (size_t i = 0; i < n; ++i) col[i] = data.ys[i][j];
            med[j] = median_of(col);
        }
    }
    return rebalance_from_tensor(med, ranks, b);
}

int balanced_unfolding_mode(const Shape& shape) {
    const Index total = shape_size(shape);
    int best = 0;
    Index best_gap = std::numeric_limits<Index>::max();
    for (size_t k = 0; k < shape.size(); ++k) {
        const Index gap = std::llabs(shape[k] - total / shape[k]);
        if (gap < best_gap) {
            best_gap = gap;
            best = static_cast<int>(k);
        }
    }
    return best;
}

InitConfig plugin_linear_init_config(const RegressionData& data, double lambda_hint, double epsilon_hint) {
    InitConfig cfg;
    const double n = static_cast<double>(data.n());
    const double px = static_cast<double>(data.xs[0].size());
    const double py = static_cast<double>(data.ys[0].size());
    const double lam = lambda_hint, eps = epsilon_hint;

    // moment levels from the sample: median-of-means of entry-averaged powers
    std::vector<double> xstat, estat;
    xstat.reserve(data.n());
    estat.reserve(data.n());
    for (const Tensor& x : data.xs)
        xstat.push_back(x.flat().array().abs().pow(2.0 + 2.0 * lam).mean());
    std::vector<double> ymed(data.n());
    for (size_t i = 0; i < data.n(); ++i) ymed[i] = data.ys[i].flat().array().abs().mean();
    const double yscale = median_of(ymed);
    for (const Tensor& y : data.ys)
        estat.push_back((y.flat().array().abs() - yscale).abs().pow(1.0 + eps).mean());
    const double mx = std::max(1e-12, median_of_means(xstat));
    const double me = std::max(1e-12, median_of_means(estat));

    const double logp = std::log(std::max(3.0, px * py));
    cfg.omega = std::pow(std::pow(px, lam) * mx * n, 1.0 / (2.0 + 2.0 * lam));
    cfg.huber_delta = std::pow(n * me / logp, 1.0 / (1.0 + eps));
    cfg.lambda_nuc = std::pow(me, 1.0 / (1.0 + eps)) * std::pow(logp / n, eps / (1.0 + eps));
    return cfg;
}

InitConfig plugin_logistic_init_config(const LogisticData& data, double lambda_hint) {
    InitConfig cfg;
    const double n = static_cast<double>(data.n());
    const double px = static_cast<double>(data.xs[0].size());
    const double lam = lambda_hint;
    std::vector<double> xstat;
    xstat.reserve(data.n());
    for (const Tensor& x : data.xs)
        xstat.push_back(x.flat().array().abs().pow(2.0 + 2.0 * lam).mean());
    const double mx = std::max(1e-12, median_of_means(xstat));
    const int mode = balanced_unfolding_mode(data.xs[0].shape());
    const double q1 = static_cast<double>(data.xs[0].dim(mode));
    const double q2 = px / q1;
    cfg.omega = std::pow(std::pow(px, lam) * mx * n, 1.0 / (2.0 + 2.0 * lam));
    cfg.lambda_nuc = std::sqrt(std::log(std::max(3.0, q1 * q2)) / n);
    return cfg;
}

}  // namespace trgd
