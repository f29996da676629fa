#include "trgd/local_moments.hpp"

#include <Eigen/QR>

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace trgd {

double direction_deviation(const Matrix& u_star, const Vector& v) {
    Eigen::ColPivHouseholderQR<Matrix> qr(u_star);
    const Matrix q = qr.householderQ() * Matrix::Identity(u_star.rows(), qr.rank());
    const double c = std::min(1.0, (q.transpose() * v).norm());
    return std::sqrt(std::max(0.0, 1.0 - c * c));
}

namespace {

Vector sphere_point(int dim, RngStream& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector g(dim);
    for (int i = 0; i < dim; ++i) g[i] = normal(rng);
    const double n = g.norm();
    return n > 0 ? Vector(g / n) : Vector(Vector::Unit(dim, 0));
}

// v = sqrt(1-s^2) u + s z for one mode; u in col(U*), z in its complement.
Vector cap_direction(const Matrix& u_star, double s, RngStream& rng) {
    const Index p = u_star.rows();
    const Index r = u_star.cols();
    Eigen::HouseholderQR<Matrix> qr(u_star);
    const Matrix q = qr.householderQ() * Matrix::Identity(p, r);
    Vector u = q * sphere_point(static_cast<int>(r), rng);
    if (r == p || s == 0.0) return u;
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector g(p);
    for (Index i = 0; i < p; ++i) g[i] = normal(rng);
    Vector z = g - q * (q.transpose() * g);
    const double zn = z.norm();
    if (zn == 0) return u;
    z /= zn;
    return std::sqrt(1.0 - s * s) * u + s * z;
}

}  // namespace

double estimate_local_moment(const TensorSampler& sampler, const Shape& shape, const std::vector<Matrix>& u_stars,
                             const LocalMomentOptions& opts, RngStream& rng) {
    const int d = static_cast<int>(shape.size());
    if (static_cast<int>(u_stars.size()) != d) throw std::invalid_argument("one factor matrix per mode required");
    if (opts.delta < 0.0 || opts.delta > 1.0) throw std::invalid_argument("delta must lie in [0, 1]");
    if (opts.n_samples < 1 || opts.n_dirs < 0) throw std::invalid_argument("sample and direction counts must be positive");
    const int excl = opts.excluded_mode.value_or(-1);
    if (excl >= d) throw std::out_of_range("excluded mode out of range");

    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // candidate pool: drawn in full regardless of delta so that the rng
    // consumption (and hence the sample stream below) is radius-independent
    std::vector<DirectionTuple> tuples;
    std::vector<bool> keep;
    for (int i = 0; i < opts.n_dirs; ++i) {
        DirectionTuple t(static_cast<size_t>(d));
        bool admissible = true;
        for (int j = 0; j < d; ++j) {
            if (j == excl) continue;
            // the first few candidates sit exactly on the factor subspace so
            // every radius has at least one admissible tuple
            const double s = (i < 2) ? 0.0 : unif(rng) ;
            if (s > opts.delta) admissible = false;
            t[static_cast<size_t>(j)] = cap_direction(u_stars[static_cast<size_t>(j)], s, rng);
        }
        tuples.push_back(std::move(t));
        keep.push_back(admissible);
    }
    for (const DirectionTuple& t : opts.forced_dirs) {
        if (static_cast<int>(t.size()) != d) throw std::invalid_argument("forced direction tuple order mismatch");
        tuples.push_back(t);
        keep.push_back(true);
    }

    std::vector<size_t> active;
    for (size_t i = 0; i < tuples.size(); ++i)
        if (keep[i]) active.push_back(i);
    if (active.empty()) throw std::logic_error("no admissible direction tuples");

    for (size_t i : active) {
        for (int j = 0; j < d; ++j) {
            if (j == excl) continue;
            const double dev = direction_deviation(u_stars[static_cast<size_t>(j)], tuples[i][static_cast<size_t>(j)]);
            if (dev > opts.delta + 1e-10) throw std::invalid_argument("direction outside the angular cap");
            assert(std::abs(tuples[i][static_cast<size_t>(j)].norm() - 1.0) < 1e-10);
        }
    }

    const Index pk = excl >= 0 ? shape[static_cast<size_t>(excl)] : 1;
    Matrix acc = Matrix::Zero(static_cast<Index>(active.size()), pk);

    // scratch for the projection cascade
    Vector ping(shape_size(shape)), pong(shape_size(shape));
    for (int s = 0; s < opts.n_samples; ++s) {
        const Tensor t = sampler(rng);
        if (t.shape() != shape) throw std::invalid_argument("sampler shape mismatch");
        for (size_t a = 0; a < active.size(); ++a) {
            const DirectionTuple& dirs = tuples[active[a]];
            const double* cur = t.data();
            Index left = 1;
            Index right_all = t.size();
            double* dst = ping.data();
            for (int j = 0; j < d; ++j) {
                const Index pj = shape[static_cast<size_t>(j)];
                right_all /= pj;
                if (j == excl) {
                    left *= pj;
                    continue;
                }
                Eigen::Map<const Matrix> dir(dirs[static_cast<size_t>(j)].data(), pj, 1);
                apply_mode_transpose(cur, left, pj, right_all, dir, dst);
                cur = dst;
                dst = (dst == ping.data()) ? pong.data() : ping.data();
            }
            if (excl < 0) {
                acc(static_cast<Index>(a), 0) += std::pow(std::fabs(cur[0]), opts.eta);
            } else {
                for (Index l = 0; l < pk; ++l) acc(static_cast<Index>(a), l) += std::pow(std::fabs(cur[l]), opts.eta);
            }
        }
    }
    return acc.maxCoeff() / static_cast<double>(opts.n_samples);
}

double estimate_local_moment(const DistSpec& dist, const Shape& shape, const std::vector<Matrix>& u_stars,
                             const LocalMomentOptions& opts, RngStream& rng) {
    return estimate_local_moment([&](RngStream& r) { return sample_tensor(shape, dist, r); }, shape, u_stars, opts,
                                 rng);
}

}  // namespace trgd
