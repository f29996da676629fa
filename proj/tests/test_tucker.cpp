#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"
#include "trgd/tucker.hpp"

using namespace trgd;
using testutil::random_factors;
using testutil::random_matrix;
using testutil::random_orthonormal;
using testutil::random_tensor;

namespace {

double reconstruction_err(const Tensor& t, const TuckerFactors& f) {
    Tensor diff = t;
    diff.flat() -= reconstruct(f).flat();
    return frobenius_norm(diff);
}

// brute-force joint minimum over sign flips; exact for rank-1 factors since
// 1x1 orthogonal matrices are +-1
double sign_flip_err_min(const TuckerFactors& f, const GroundTruth& truth) {
    const int d = f.order();
    double best = std::numeric_limits<double>::infinity();
    for (int mask = 0; mask < (1 << d); ++mask) {
        double err = 0.0;
        double core_sign = 1.0;
        for (int k = 0; k < d; ++k) {
            const double s = (mask >> k) & 1 ? -1.0 : 1.0;
            core_sign *= s;
            err += (f.factors[static_cast<size_t>(k)] - s * truth.factors.factors[static_cast<size_t>(k)]).squaredNorm();
        }
        Tensor dcore = f.core;
        dcore.flat() -= core_sign * truth.factors.core.flat();
        err += inner_full(dcore, dcore);
        best = std::min(best, err);
    }
    return best;
}

}  // namespace

TEST_CASE("reconstruct trivial cases") {
    RngStream rng = make_stream(11, 0);
    TuckerFactors f;
    f.core = random_tensor({2, 3, 2}, rng);
    f.factors = {Matrix::Identity(2, 2), Matrix::Identity(3, 3), Matrix::Identity(2, 2)};
    CHECK((reconstruct(f).flat() - f.core.flat()).lpNorm<Eigen::Infinity>() < 1e-14);

    // rank-1: c * u o v o w
    TuckerFactors r1;
    r1.core = Tensor::constant({1, 1, 1}, 2.5);
    const Matrix u = random_matrix(4, 1, rng), v = random_matrix(3, 1, rng), w = random_matrix(5, 1, rng);
    r1.factors = {u, v, w};
    const Tensor got = reconstruct(r1);
    const Tensor want = outer(Tensor({4}, u.col(0)), outer(Tensor({3}, v.col(0)), Tensor({5}, w.col(0))));
    CHECK((got.flat() - 2.5 * want.flat()).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("reconstruct the all-ones rank-1 coefficient tensor") {
    TuckerFactors f;
    f.core = Tensor::constant({1, 1, 1}, std::sqrt(10.0));
    f.factors.assign(3, Matrix::Ones(10, 1));
    const Tensor a = reconstruct(f);
    for (Index i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(std::sqrt(10.0)));
}

TEST_CASE("hosvd recovers exact low rank and full rank") {
    RngStream rng = make_stream(11, 1);
    TuckerFactors r1 = random_factors({6, 6, 6}, {1, 1, 1}, rng);
    const Tensor t = reconstruct(r1);
    CHECK(reconstruction_err(t, hosvd(t, {1, 1, 1})) < 1e-10);

    const Tensor full = random_tensor({4, 3, 5}, rng);
    CHECK(reconstruction_err(full, hosvd(full, {4, 3, 5})) < 1e-10);
    CHECK_THROWS_AS(hosvd(full, Shape{5, 3, 5}), std::invalid_argument);
}

TEST_CASE("hosvd beats random orthonormal projections") {
    RngStream rng = make_stream(11, 2);
    const Tensor t = random_tensor({6, 6, 6}, rng);
    const double hosvd_err = reconstruction_err(t, hosvd(t, {2, 2, 2}));
    for (int trial = 0; trial < 100; ++trial) {
        TuckerFactors proj;
        proj.factors.clear();
        std::vector<Matrix> us;
        for (int k = 0; k < 3; ++k) us.push_back(random_orthonormal(6, 2, rng));
        Tensor core = t;
        for (int k = 0; k < 3; ++k) core = mode_product(core, us[static_cast<size_t>(k)].transpose(), k);
        proj.core = core;
        proj.factors = us;
        CHECK(hosvd_err <= reconstruction_err(t, proj) + 1e-12);
    }
}

TEST_CASE("hooi converges and never increases the residual") {
    RngStream rng = make_stream(11, 3);
    const Tensor exact = reconstruct(random_factors({6, 5, 4}, {2, 2, 2}, rng));
    CHECK(reconstruction_err(exact, hooi(exact, {2, 2, 2})) < 1e-10);

    // noisy rank-1: every sweep is tracked through a manual loop here
    TuckerFactors truth = random_factors({10, 10, 10}, {1, 1, 1}, rng);
    Tensor noisy = reconstruct(truth);
    const Tensor noise = random_tensor(noisy.shape(), rng, 0.01);
    noisy.flat() += noise.flat();

    TuckerFactors f = hosvd(noisy, {1, 1, 1});
    double prev = reconstruction_err(noisy, f);
    const double hosvd_res = prev;
    for (int sweep = 1; sweep <= 6; ++sweep) {
        f = hooi(noisy, {1, 1, 1}, sweep, 0.0);
        const double res = reconstruction_err(noisy, f);
        CHECK(res <= prev + 1e-12);
        prev = res;
    }
    CHECK(prev <= hosvd_res + 1e-12);
}

TEST_CASE("hooi leaves an optimal rank-1 decomposition unchanged up to sign") {
    RngStream rng = make_stream(11, 4);
    const Matrix u = random_matrix(6, 1, rng);
    TuckerFactors sym;
    sym.core = Tensor::constant({1, 1, 1}, 3.0);
    sym.factors = {u, u, u};
    const Tensor t = reconstruct(sym);
    const TuckerFactors h = hosvd(t, {1, 1, 1});
    const TuckerFactors refined = hooi(t, {1, 1, 1});
    for (int k = 0; k < 3; ++k) {
        const double align = std::abs((h.factors[static_cast<size_t>(k)].transpose() *
                                       refined.factors[static_cast<size_t>(k)])(0, 0));
        CHECK(align == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("GroundTruth::balanced produces b-orthogonal factors") {
    RngStream rng = make_stream(11, 5);
    const TuckerFactors raw = random_factors({8, 7, 6}, {2, 3, 2}, rng);
    for (double b : {0.5, 1.0, 3.0}) {
        const GroundTruth gt = GroundTruth::balanced(raw, b);
        for (int k = 0; k < 3; ++k) {
            const Matrix& u = gt.factors.factors[static_cast<size_t>(k)];
            const Matrix gram = u.transpose() * u;
            CHECK((gram - b * b * Matrix::Identity(gram.rows(), gram.cols())).lpNorm<Eigen::Infinity>() < 1e-10);
        }
        // rebalancing preserves the reconstruction
        CHECK((reconstruct(gt.factors).flat() - reconstruct(raw).flat()).lpNorm<Eigen::Infinity>() <
              1e-10 * std::max(1.0, frobenius_norm(reconstruct(raw))));
        CHECK(gt.sigma_bar >= gt.sigma_min);
        CHECK(gt.sigma_min > 0);
        CHECK(gt.kappa() >= 1.0);
    }
}

TEST_CASE("err_metric is zero at the truth and rotation-invariant") {
    RngStream rng = make_stream(11, 6);
    const GroundTruth gt = GroundTruth::balanced(random_factors({6, 5, 7}, {2, 2, 3}, rng), 1.3);
    CHECK(err_metric(gt.factors, gt) < 1e-12);

    // rotate factor 0 and counter-rotate the core
    TuckerFactors rot = gt.factors;
    const Matrix o = random_orthonormal(2, 2, rng);
    rot.factors[0] = rot.factors[0] * o;
    rot.core = mode_product(rot.core, o.transpose(), 0);
    CHECK(err_metric(rot, gt) < 1e-10);
}

TEST_CASE("err_metric equals the exhaustive sign-flip minimum for rank-1") {
    RngStream rng = make_stream(11, 7);
    for (int trial = 0; trial < 20; ++trial) {
        const GroundTruth gt = GroundTruth::balanced(random_factors({5, 4, 6}, {1, 1, 1}, rng), 1.0);
        TuckerFactors f = random_factors({5, 4, 6}, {1, 1, 1}, rng);
        const double got = err_metric(f, gt);
        const double want = sign_flip_err_min(f, gt);
        CHECK(std::abs(got - want) < 1e-12 * std::max(1.0, want));

        // negated copy of the truth also lands on the minimum
        TuckerFactors neg = gt.factors;
        for (Matrix& u : neg.factors) u = -u;
        neg.core.flat() *= -1.0;  // odd order: flip core to keep the product
        CHECK(err_metric(neg, gt) == doctest::Approx(sign_flip_err_min(neg, gt)).epsilon(1e-12));
    }
}

TEST_CASE("err_metric zero iff equal reconstruction for rank-1") {
    RngStream rng = make_stream(11, 8);
    for (int trial = 0; trial < 20; ++trial) {
        const GroundTruth gt = GroundTruth::balanced(random_factors({4, 4, 4}, {1, 1, 1}, rng), 1.0);
        // same reconstruction via a sign flip on two modes
        TuckerFactors f = gt.factors;
        f.factors[0] *= -1.0;
        f.factors[1] *= -1.0;
        CHECK((reconstruct(f).flat() - reconstruct(gt.factors).flat()).lpNorm<Eigen::Infinity>() < 1e-12);
        CHECK(err_metric(f, gt) < 1e-10);

        // different reconstruction implies a positive metric
        TuckerFactors g = random_factors({4, 4, 4}, {1, 1, 1}, rng);
        const double recon_gap = frobenius_norm([&] {
            Tensor d = reconstruct(g);
            d.flat() -= reconstruct(gt.factors).flat();
            return d;
        }());
        if (recon_gap > 1e-6) CHECK(err_metric(g, gt) > 1e-12);
    }
}

TEST_CASE("err_metric validates conformance") {
    RngStream rng = make_stream(11, 9);
    const GroundTruth gt = GroundTruth::balanced(random_factors({4, 4, 4}, {2, 2, 2}, rng), 1.0);
    const TuckerFactors wrong = random_factors({4, 4, 4}, {1, 1, 1}, rng);
    CHECK_THROWS_AS(err_metric(wrong, gt), std::invalid_argument);
}

TEST_CASE("subspace_angle basic geometry") {
    Matrix e1 = Matrix::Zero(3, 1), rot = Matrix::Zero(3, 1);
    e1(0, 0) = 1.0;
    CHECK(subspace_angle(e1, e1) == doctest::Approx(0.0));

    const double alpha = 0.3;
    rot(0, 0) = std::cos(alpha);
    rot(1, 0) = std::sin(alpha);
    CHECK(subspace_angle(e1, rot) == doctest::Approx(std::abs(std::sin(alpha))).epsilon(1e-12));

    Matrix e2 = Matrix::Zero(2, 1), e2b = Matrix::Zero(2, 1);
    e2(0, 0) = 1.0;
    e2b(1, 0) = 1.0;
    CHECK(subspace_angle(e2, e2b) == doctest::Approx(1.0));

    CHECK_THROWS_AS(subspace_angle(Matrix::Zero(3, 1), e1), std::invalid_argument);
}
