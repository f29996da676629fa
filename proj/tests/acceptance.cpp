// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line each. Exit status is the number of failed criteria.
//
//   ./acceptance           run everything
//   ./acceptance 1 9 11    run a subset by number

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "test_util.hpp"
#include "trgd/experiments.hpp"

using namespace trgd;
namespace fs = std::filesystem;

namespace {

struct Check {
    std::string label;
    bool ok;
};

std::vector<Check>* g_checks = nullptr;

void expect(bool ok, const std::string& label) { g_checks->push_back({label, ok}); }

fs::path out_root() {
    const fs::path p = fs::temp_directory_path() / "trgd_acceptance";
    fs::create_directories(p);
    return p;
}

ExperimentPlan desk_plan(int exp_id, std::uint64_t seed = 20250401) {
    ExperimentPlan plan;
    plan.exp_id = exp_id;
    plan.preset = Preset::desk;
    plan.master_seed = seed;
    plan.out_dir = (out_root() / ("exp" + std::to_string(exp_id))).string();
    return plan;
}

// ----- aggregation helpers over result rows ---------------------------------

double mean_where(const std::vector<ResultRow>& rows, const std::function<bool(const ResultRow&)>& pred) {
    double acc = 0.0;
    int n = 0;
    for (const ResultRow& r : rows)
        if (pred(r)) {
            acc += r.value;
            ++n;
        }
    return n > 0 ? acc / n : std::numeric_limits<double>::quiet_NaN();
}

// ----- criterion 1: analytic gradients vs central differences --------------

template <typename LossFn>
double max_block_rel_err(const TuckerFactors& f, const GradientSet& got, const LossFn& loss, double h = 1e-5) {
    auto rel = [](const auto& a, const auto& b) {
        double num = 0, den = 0;
        for (Index i = 0; i < a.size(); ++i) {
            const double d = a.data()[i] - b.data()[i];
            num += d * d;
            den += b.data()[i] * b.data()[i];
        }
        return std::sqrt(num) / std::max(std::sqrt(den), 1e-9);
    };
    TuckerFactors w = f;
    double worst = 0.0;
    Tensor fd_core(f.core.shape());
    for (Index i = 0; i < f.core.size(); ++i) {
        w.core[i] = f.core[i] + h;
        const double up = loss(w);
        w.core[i] = f.core[i] - h;
        const double dn = loss(w);
        w.core[i] = f.core[i];
        fd_core[i] = (up - dn) / (2 * h);
    }
    worst = std::max(worst, rel(got.core_grad.flat(), fd_core.flat()));
    for (size_t k = 0; k < f.factors.size(); ++k) {
        Matrix fd(f.factors[k].rows(), f.factors[k].cols());
        for (Index i = 0; i < fd.size(); ++i) {
            w.factors[k].data()[i] = f.factors[k].data()[i] + h;
            const double up = loss(w);
            w.factors[k].data()[i] = f.factors[k].data()[i] - h;
            const double dn = loss(w);
            w.factors[k].data()[i] = f.factors[k].data()[i];
            fd.data()[i] = (up - dn) / (2 * h);
        }
        worst = std::max(worst, rel(got.factor_grads[k], fd));
    }
    return worst;
}

void criterion_gradient_oracles() {
    RngStream rng = make_stream(101, 0);
    const Shape dims{5, 4, 3};
    const GroundTruth truth = GroundTruth::balanced(testutil::random_factors(dims, {1, 1, 1}, rng), 1.0);

    {
        RegressionData d = generate_regression(truth, 8, DistSpec::gaussian(), DistSpec::gaussian(0.4), 2, rng);
        TuckerFactors f = testutil::random_factors(dims, {1, 1, 1}, rng);
        const GradientSet g = linear_gradients(f, d, TruncationLevel::infinite());
        const double err = max_block_rel_err(f, g, [&](const TuckerFactors& w) {
            const Tensor a = reconstruct(w);
            double acc = 0.0;
            for (size_t i = 0; i < d.n(); ++i) {
                Tensor r = inner_generalized(a, d.xs[i]);
                r.flat() -= d.ys[i].flat();
                acc += 0.5 * inner_full(r, r);
            }
            return acc / static_cast<double>(d.n());
        });
        expect(err < 1e-6, "linear gradient rel err " + std::to_string(err));
    }
    {
        LogisticData d = generate_logistic(truth, 9, DistSpec::gaussian(), rng);
        TuckerFactors f = testutil::random_factors(dims, {1, 1, 1}, rng);
        const GradientSet g = logistic_gradients(f, d, TruncationLevel::infinite());
        const double err = max_block_rel_err(f, g, [&](const TuckerFactors& w) {
            const Tensor a = reconstruct(w);
            double acc = 0.0;
            for (size_t i = 0; i < d.n(); ++i) {
                const double s = inner_full(d.xs[i], a);
                acc += log1p_exp(s) - static_cast<double>(d.ys[i]) * s;
            }
            return acc / static_cast<double>(d.n());
        });
        expect(err < 1e-6, "logistic gradient rel err " + std::to_string(err));
    }
    {
        PcaData d = generate_pca(truth, 4, DistSpec::gaussian(), rng);
        TuckerFactors f = testutil::random_factors(dims, {1, 1, 1}, rng);
        const GradientSet g = pca_gradients(f, d, TruncationLevel::infinite());
        const double err = max_block_rel_err(f, g, [&](const TuckerFactors& w) {
            const Tensor a = reconstruct(w);
            double acc = 0.0;
            for (size_t i = 0; i < d.n(); ++i) {
                Tensor r = d.ys[i];
                r.flat() -= a.flat();
                acc += 0.5 * inner_full(r, r);
            }
            return acc / static_cast<double>(d.n());
        });
        expect(err < 1e-6, "pca gradient rel err " + std::to_string(err));
    }
}

// ----- criterion 2: vanilla reduction against an independent flat GD -------

void criterion_vgd_reduction() {
    RngStream rng = make_stream(101, 1);
    const Index p = 4, r = 2;
    const GroundTruth truth = GroundTruth::balanced(testutil::random_factors({p, p}, {r, r}, rng), 1.0);
    RegressionData d = generate_regression(truth, 50, DistSpec::gaussian(), DistSpec::gaussian(0.2), 2, rng);

    std::vector<Matrix> xs;
    std::vector<double> ys;
    for (size_t i = 0; i < d.n(); ++i) {
        xs.push_back(Eigen::Map<const Matrix>(d.xs[i].data(), p, p));
        ys.push_back(d.ys[i].as_scalar());
    }
    OptimizerConfig cfg;
    cfg.a = 0.5;
    cfg.b = 1.0;
    cfg.eta = 0.02;

    TuckerFactors f = testutil::random_factors({p, p}, {r, r}, rng);
    Matrix s = Eigen::Map<const Matrix>(f.core.data(), r, r);
    Matrix u1 = f.factors[0], u2 = f.factors[1];

    GradientScratch scratch;
    double max_dev = 0.0;
    for (int t = 0; t < 100; ++t) {
        const GradientSet g = linear_gradients(f, d, TruncationLevel::infinite(), &scratch);
        f = rgd_step(f, g, cfg);

        // hand-derived block gradients on plain matrices
        Matrix gs = Matrix::Zero(r, r), g1 = Matrix::Zero(p, r), g2 = Matrix::Zero(p, r);
        const Matrix ahat = u1 * s * u2.transpose();
        for (size_t i = 0; i < xs.size(); ++i) {
            const double resid = (ahat.array() * xs[i].array()).sum() - ys[i];
            gs += u1.transpose() * (resid * xs[i]) * u2;
            g1 += (resid * xs[i]) * u2 * s.transpose();
            g2 += (resid * xs[i]).transpose() * u1 * s;
        }
        const double n = static_cast<double>(xs.size());
        const Matrix r1 = u1 * (u1.transpose() * u1 - Matrix::Identity(r, r));
        const Matrix r2 = u2 * (u2.transpose() * u2 - Matrix::Identity(r, r));
        const Matrix u1n = u1 - cfg.eta * g1 / n - cfg.eta * cfg.a * r1;
        const Matrix u2n = u2 - cfg.eta * g2 / n - cfg.eta * cfg.a * r2;
        s -= cfg.eta * gs / n;
        u1 = u1n;
        u2 = u2n;

        max_dev = std::max(max_dev, (Eigen::Map<const Matrix>(f.core.data(), r, r) - s).lpNorm<Eigen::Infinity>());
        max_dev = std::max(max_dev, (f.factors[0] - u1).lpNorm<Eigen::Infinity>());
        max_dev = std::max(max_dev, (f.factors[1] - u2).lpNorm<Eigen::Infinity>());
    }
    expect(max_dev < 1e-10, "per-iterate max deviation " + std::to_string(max_dev));
}

// ----- criterion 3: noiseless exact recovery --------------------------------

void criterion_noiseless_recovery() {
    RngStream rng = make_stream(101, 2);
    const GroundTruth truth = paper_truth(10, 1.0);
    {
        RegressionData d = generate_regression(truth, 500, DistSpec::gaussian(), DistSpec::gaussian(0.0), 3, rng);
        OptimizerConfig cfg;
        cfg.tau = TruncationLevel::finite(std::sqrt(500.0 / std::log(10.0)));
        const FitReport rep = rgd_fit(truth.factors, d, ModelKind::linear, cfg, &truth);
        Tensor diff = reconstruct(rep.final);
        diff.flat() -= reconstruct(truth.factors).flat();
        const double err = inner_full(diff, diff);
        expect(err < 1e-8, "linear noiseless final error " + std::to_string(err));
    }
    {
        PcaData d;
        d.ys = {reconstruct(truth.factors)};
        const TuckerFactors f0 = hosvd(d.ys[0], {1, 1, 1});
        OptimizerConfig cfg;
        cfg.tau = TruncationLevel::finite(std::sqrt(1.0 / std::log(10.0)));
        const FitReport rep = rgd_fit(f0, d, ModelKind::pca, cfg, &truth);
        const double err = err_metric(rep.final, truth);
        expect(err < 1e-10, "pca noiseless err metric " + std::to_string(err));
    }
}

// ----- criteria 4-7 and 10: experiment-level orderings ----------------------

void criterion_exp1_ordering() {
    const std::vector<ResultRow> rows = run_experiment(desk_plan(1)).rows;
    auto prop = [&](double lambda) {
        return mean_where(rows, [&](const ResultRow& r) {
            return r.model == "I" && r.m == 3 && std::abs(r.lambda - lambda) < 1e-12;
        });
    };
    const double p01 = prop(0.1), p10 = prop(1.0), p13 = prop(1.3), p16 = prop(1.6);
    expect(p01 <= p16 - 0.1, "prop(0.1)=" + std::to_string(p01) + " vs prop(1.6)=" + std::to_string(p16));
    expect(std::abs(p10 - p13) <= 0.2, "prop(1.0) vs prop(1.3)");
    expect(std::abs(p10 - p16) <= 0.2, "prop(1.0) vs prop(1.6)");
    expect(std::abs(p13 - p16) <= 0.2, "prop(1.3) vs prop(1.6)");
}

std::map<double, LineFit> rate_slopes(const std::vector<ResultRow>& rows) {
    std::map<double, std::map<long long, std::pair<double, int>>> cells;
    for (const ResultRow& r : rows) {
        if (r.model != "I" && r.model != "IV") continue;
        auto& c = cells[r.epsilon][r.n];
        c.first += r.value;
        c.second += 1;
    }
    std::map<double, LineFit> fits;
    for (const auto& [eps, byn] : cells) {
        std::vector<double> xs, ys;
        for (const auto& [n, mv] : byn) {
            xs.push_back(std::log2(static_cast<double>(n) / 200.0));
            ys.push_back(mv.first / mv.second);
        }
        fits[eps] = fit_line(xs, ys);
    }
    return fits;
}

void check_slope_criteria(const std::map<double, LineFit>& fits, const std::string& tag) {
    const double s01 = fits.at(0.1).slope, s07 = fits.at(0.7).slope, s10 = fits.at(1.0).slope;
    const double s13 = fits.at(1.3).slope, s16 = fits.at(1.6).slope;
    expect(s01 < s07 && s07 < s10,
           tag + " slope ordering s(0.1)=" + std::to_string(s01) + " s(0.7)=" + std::to_string(s07) +
               " s(1.0)=" + std::to_string(s10));
    const double hi = std::max({s10, s13, s16}), lo = std::min({s10, s13, s16});
    expect((hi - lo) / std::max(std::abs(hi), 1e-12) < 0.25, tag + " stabilized slopes gap");
    for (double eps : {0.1, 0.7, 1.0, 1.3, 1.6})
        expect(fits.at(eps).r2 > 0.8, tag + " r2(" + std::to_string(eps) + ")=" + std::to_string(fits.at(eps).r2));
}

void criterion_exp2_slopes() {
    const std::vector<ResultRow> rows = run_experiment(desk_plan(2)).rows;
    check_slope_criteria(rate_slopes(rows), "exp2");
}

void check_theta_monotonicity(const std::vector<ResultRow>& rows, const std::string& model, const std::string& tag) {
    auto err_at = [&](int theta0) {
        return mean_where(rows, [&](const ResultRow& r) { return r.model == model && r.n == 700 && r.theta0 == theta0; });
    };
    const double e0 = err_at(0), e2 = err_at(2), e4 = err_at(4);
    expect(e0 < e2 && e2 < e4, tag + " monotone errors " + std::to_string(e0) + " < " + std::to_string(e2) + " < " +
                                   std::to_string(e4));
    expect(e4 / e0 > 1.5, tag + " ratio " + std::to_string(e4 / e0));
}

void criterion_exp3_monotonicity() {
    const std::vector<ResultRow> rows = run_experiment(desk_plan(3)).rows;
    check_theta_monotonicity(rows, "I", "exp3");
}

void check_method_gaps(const std::vector<ResultRow>& rows, bool with_huber, int light_case, int heavy_case,
                       const std::string& tag) {
    auto mean_m = [&](int dist_case, const char* method) {
        return mean_where(rows, [&](const ResultRow& r) { return r.dist_case == dist_case && r.method == method; });
    };
    const double rgd1 = mean_m(light_case, "RGD"), vgd1 = mean_m(light_case, "VGD");
    expect(std::abs(rgd1 - vgd1) < 0.5, tag + " light-tail |RGD-VGD| = " + std::to_string(std::abs(rgd1 - vgd1)));
    const double rgdh = mean_m(heavy_case, "RGD"), vgdh = mean_m(heavy_case, "VGD");
    expect(vgdh - rgdh > 1.0, tag + " heavy-tail VGD-RGD = " + std::to_string(vgdh - rgdh));
    if (with_huber) {
        std::set<int> cases;
        for (const ResultRow& r : rows) cases.insert(r.dist_case);
        for (int c : cases) {
            const double rgd = mean_m(c, "RGD"), hub = mean_m(c, "HUB");
            expect(rgd <= hub + 0.3,
                   tag + " case " + std::to_string(c) + " RGD=" + std::to_string(rgd) + " HUB=" + std::to_string(hub));
        }
    }
}

void criterion_exp4_methods() {
    const std::vector<ResultRow> all = run_experiment(desk_plan(4)).rows;
    std::vector<ResultRow> rows;
    for (const ResultRow& r : all)
        if (r.model == "I") rows.push_back(r);
    check_method_gaps(rows, true, 1, 4, "exp4");
}

void criterion_appendix_f() {
    {
        const std::vector<ResultRow> rows = run_experiment(desk_plan(7)).rows;
        auto mean_m = [&](int c, const char* method) {
            return mean_where(rows, [&](const ResultRow& r) { return r.dist_case == c && r.method == method; });
        };
        const double gap = mean_m(2, "VGD") - mean_m(2, "RGD");
        expect(gap > 1.0, "exp7 heavy-tail VGD-RGD = " + std::to_string(gap));
    }
    {
        const std::vector<ResultRow> rows = run_experiment(desk_plan(8)).rows;
        check_slope_criteria(rate_slopes(rows), "exp8");
    }
    {
        const std::vector<ResultRow> rows = run_experiment(desk_plan(9)).rows;
        check_theta_monotonicity(rows, "IV", "exp9");
    }
}

// ----- criterion 8: the directional local-moment example --------------------

void criterion_local_moments() {
    const Index p = 10;
    const double p3 = 1000.0;
    std::vector<Matrix> us;
    for (int k = 0; k < 3; ++k) {
        Matrix u = Matrix::Zero(p, 1);
        u(0, 0) = 1.0;
        us.push_back(std::move(u));
    }
    LocalMomentOptions opt;
    opt.eta = 2.0;
    opt.n_dirs = 16;
    opt.n_samples = 100000;

    opt.delta = 1.0;
    opt.forced_dirs = {DirectionTuple(3, Vector::Ones(p) / std::sqrt(static_cast<double>(p)))};
    RngStream r1 = make_stream(101, 8);
    const double global = estimate_local_moment(DistSpec::equicorr(0.5), {p, p, p}, us, opt, r1);
    expect(global >= 0.9 * (p3 + 1.0) / 2.0, "global estimate " + std::to_string(global));

    opt.delta = std::pow(static_cast<double>(p), -1.5);
    opt.forced_dirs.clear();
    RngStream r2 = make_stream(101, 9);
    const double local = estimate_local_moment(DistSpec::equicorr(0.5), {p, p, p}, us, opt, r2);
    expect(local <= 2.2, "local estimate " + std::to_string(local));
}

// ----- criterion 9: procrustes metric vs exhaustive sign flips --------------

void criterion_err_metric_oracle() {
    RngStream rng = make_stream(101, 10);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const GroundTruth gt = GroundTruth::balanced(testutil::random_factors({5, 4, 6}, {1, 1, 1}, rng), 1.0);
        const TuckerFactors f = testutil::random_factors({5, 4, 6}, {1, 1, 1}, rng);
        double best = std::numeric_limits<double>::infinity();
        for (int mask = 0; mask < 8; ++mask) {
            double err = 0.0;
            double core_sign = 1.0;
            for (int k = 0; k < 3; ++k) {
                const double s = (mask >> k) & 1 ? -1.0 : 1.0;
                core_sign *= s;
                err += (f.factors[static_cast<size_t>(k)] - s * gt.factors.factors[static_cast<size_t>(k)])
                           .squaredNorm();
            }
            Tensor dc = f.core;
            dc.flat() -= core_sign * gt.factors.core.flat();
            err += inner_full(dc, dc);
            best = std::min(best, err);
        }
        worst = std::max(worst, std::abs(err_metric(f, gt) - best));
    }
    expect(worst < 1e-12, "max deviation " + std::to_string(worst));
}

// ----- criterion 11: byte-identical re-runs ---------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_determinism() {
    ExperimentPlan p1 = desk_plan(1);
    p1.reps = 5;
    p1.threads = 2;
    p1.out_dir = (out_root() / "det_a").string();
    ExperimentPlan p2 = p1;
    p2.threads = 1;
    p2.out_dir = (out_root() / "det_b").string();
    run_experiment(p1);
    run_experiment(p2);
    const std::string a = slurp(fs::path(p1.out_dir) / "results.csv");
    const std::string b = slurp(fs::path(p2.out_dir) / "results.csv");
    expect(!a.empty() && a == b, "results.csv byte identity across re-run and thread counts");
}

struct Criterion {
    int id;
    const char* title;
    std::function<void()> fn;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {1, "gradient oracles match central finite differences", criterion_gradient_oracles},
        {2, "tau = inf reduces to independent plain gradient descent", criterion_vgd_reduction},
        {3, "noiseless exact recovery (linear and pca)", criterion_noiseless_recovery},
        {4, "experiment 1 convergence-proportion ordering", criterion_exp1_ordering},
        {5, "experiment 2 slope transition", criterion_exp2_slopes},
        {6, "experiment 3 local-moment monotonicity", criterion_exp3_monotonicity},
        {7, "experiment 4 method ordering", criterion_exp4_methods},
        {8, "directional local moments (forced-alignment example)", criterion_local_moments},
        {9, "err metric equals the sign-flip oracle", criterion_err_metric_oracle},
        {10, "appendix experiments 7-9 orderings", criterion_appendix_f},
        {11, "byte-identical deterministic re-runs", criterion_determinism},
    };

    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const Criterion& c : criteria) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        std::vector<Check> checks;
        g_checks = &checks;
        const auto t0 = std::chrono::steady_clock::now();
        bool threw = false;
        std::string what;
        try {
            c.fn();
        } catch (const std::exception& e) {
            threw = true;
            what = e.what();
        }
        const double secs =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count() /
            1000.0;
        bool ok = !threw;
        for (const Check& ch : checks) ok = ok && ch.ok;
        std::printf("[%s] criterion %2d: %s (%.1fs)\n", ok ? "PASS" : "FAIL", c.id, c.title, secs);
        if (threw) std::printf("       exception: %s\n", what.c_str());
        for (const Check& ch : checks)
            if (!ch.ok) std::printf("       failed: %s\n", ch.label.c_str());
        if (!ok) ++failed;
    }
    return failed;
}
