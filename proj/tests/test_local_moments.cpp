#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"
#include "trgd/local_moments.hpp"

using namespace trgd;

namespace {

std::vector<Matrix> e1_factors(Index p, int d) {
    std::vector<Matrix> us;
    for (int k = 0; k < d; ++k) {
        Matrix u = Matrix::Zero(p, 1);
        u(0, 0) = 1.0;
        us.push_back(std::move(u));
    }
    return us;
}

}  // namespace

TEST_CASE("direction deviation and cap membership") {
    Matrix u = Matrix::Zero(3, 1);
    u(0, 0) = 1.0;
    Vector v(3);
    v << 1, 0, 0;
    CHECK(direction_deviation(u, v) == doctest::Approx(0.0));
    v << 0, 1, 0;
    CHECK(direction_deviation(u, v) == doctest::Approx(1.0));
    const double s = 0.3;
    v << std::sqrt(1 - s * s), s, 0;
    CHECK(direction_deviation(u, v) == doctest::Approx(s).epsilon(1e-12));
}

TEST_CASE("isotropic gaussian has unit directional second moments") {
    RngStream rng = make_stream(23, 0);
    const Shape shape{6, 6, 6};
    LocalMomentOptions opt;
    opt.eta = 2.0;
    opt.n_dirs = 12;
    opt.n_samples = 20000;
    for (double delta : {0.05, 0.5, 1.0}) {
        opt.delta = delta;
        RngStream local = make_stream(23, 1);
        const double est = estimate_local_moment(DistSpec::gaussian(), shape, e1_factors(6, 3), opt, local);
        CHECK(est > 0.9);
        CHECK(est < 1.1);
    }
}

TEST_CASE("estimate is monotone in the radius under a shared seed") {
    const Shape shape{5, 5, 5};
    LocalMomentOptions opt;
    opt.n_dirs = 24;
    opt.n_samples = 4000;
    const DistSpec dist = DistSpec::equicorr(0.5);
    double prev = -1.0;
    for (double delta : {0.0, 0.1, 0.3, 0.6, 1.0}) {
        opt.delta = delta;
        RngStream rng = make_stream(23, 2);  // same stream for nesting
        const double est = estimate_local_moment(dist, shape, e1_factors(5, 3), opt, rng);
        CHECK(est >= prev);
        prev = est;
    }
}

TEST_CASE("forced directions are validated against the radius") {
    const Shape shape{4, 4, 4};
    LocalMomentOptions opt;
    opt.delta = 0.01;
    opt.n_dirs = 4;
    opt.n_samples = 10;
    DirectionTuple aligned(3, Vector::Ones(4) / 2.0);  // deviation sqrt(1 - 1/4), far outside
    opt.forced_dirs = {aligned};
    RngStream rng = make_stream(23, 3);
    CHECK_THROWS_AS(estimate_local_moment(DistSpec::gaussian(), shape, e1_factors(4, 3), opt, rng),
                    std::invalid_argument);
}

TEST_CASE("directional-dependence example: global moment large, local moment small") {
    // vec(X) ~ N(0, 0.5 I + 0.5 11^T) at p = 5 keeps the unit test fast; the
    // aligned direction carries (p^3 + 1)/2 while the e1-aligned cap stays
    // near 1.
    const Index p = 5;
    const Shape shape{p, p, p};
    const double p3 = static_cast<double>(p * p * p);
    LocalMomentOptions opt;
    opt.eta = 2.0;
    opt.n_dirs = 8;
    opt.n_samples = 30000;

    SUBCASE("delta = 1 with the aligned direction forced") {
        opt.delta = 1.0;
        opt.forced_dirs = {DirectionTuple(3, Vector::Ones(p) / std::sqrt(static_cast<double>(p)))};
        RngStream rng = make_stream(23, 4);
        const double est = estimate_local_moment(DistSpec::equicorr(0.5), shape, e1_factors(p, 3), opt, rng);
        CHECK(est >= 0.9 * (p3 + 1.0) / 2.0);
    }
    SUBCASE("small delta keeps the local moment near the diagonal level") {
        opt.delta = std::pow(static_cast<double>(p), -1.5);
        RngStream rng = make_stream(23, 5);
        const double est = estimate_local_moment(DistSpec::equicorr(0.5), shape, e1_factors(p, 3), opt, rng);
        CHECK(est <= 2.2);
    }
}

TEST_CASE("mode-k-excluded moment maximizes over coordinates") {
    // variance concentrated on coordinate 2 of mode 0; excluding mode 0
    // must find it regardless of the tiny radius
    const Shape shape{4, 3};
    LocalMomentOptions opt;
    opt.excluded_mode = 0;
    opt.delta = 0.0;
    opt.n_dirs = 6;
    opt.n_samples = 20000;
    std::vector<Matrix> us = e1_factors(4, 2);
    us[1] = Matrix::Zero(3, 1);
    us[1](0, 0) = 1.0;

    auto sampler = [](RngStream& rng) {
        std::normal_distribution<double> normal(0.0, 1.0);
        Tensor t(Shape{4, 3});
        t.at({2, 0}) = 5.0 * normal(rng);
        t.at({0, 0}) = normal(rng);
        return t;
    };
    RngStream rng = make_stream(23, 6);
    const double est = estimate_local_moment(sampler, shape, us, opt, rng);
    CHECK(est == doctest::Approx(25.0).epsilon(0.1));
}

TEST_CASE("option validation") {
    const Shape shape{3, 3};
    LocalMomentOptions opt;
    opt.delta = 1.5;
    RngStream rng = make_stream(23, 7);
    CHECK_THROWS_AS(estimate_local_moment(DistSpec::gaussian(), shape, e1_factors(3, 2), opt, rng),
                    std::invalid_argument);
    opt.delta = 0.5;
    opt.excluded_mode = 5;
    CHECK_THROWS_AS(estimate_local_moment(DistSpec::gaussian(), shape, e1_factors(3, 2), opt, rng),
                    std::out_of_range);
}
