#include "trgd/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <thread>

#include "trgd/plots.hpp"
#include "trgd/rng.hpp"

namespace trgd {

namespace fs = std::filesystem;

int ExperimentPlan::effective_reps() const {
    if (reps > 0) return reps;
    return preset == Preset::paper ? 200 : 25;
}

int ExperimentPlan::effective_threads() const {
    if (threads > 0) return threads;
    if (const char* env = std::getenv("TRGD_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void ExperimentPlan::validate() const {
    if (exp_id < 1 || exp_id > 10) throw std::invalid_argument("experiment id must be in 1..10");
    const int r = effective_reps();
    if (r < 1) throw std::invalid_argument("replication count must be at least 1");
    if (preset == Preset::desk && 200 % r != 0)
        throw std::invalid_argument("desk replication count must divide the paper count of 200");
    if (desk_n_cap < 1) throw std::invalid_argument("sample size cap must be positive");
}

GroundTruth paper_truth(Index p, double b) {
    TuckerFactors raw;
    raw.core = Tensor::constant({1, 1, 1}, std::sqrt(10.0));
    raw.factors.assign(3, Matrix::Ones(p, 1));
    return GroundTruth::balanced(raw, b);
}

double tau_rate(long long n, double pbar, double eps_eff) {
    return std::pow(static_cast<double>(n) / std::log(pbar), 1.0 / (1.0 + eps_eff));
}

void parallel_for_tasks(int n_tasks, int threads, const std::function<void(int)>& fn) {
    threads = std::max(1, std::min(threads, n_tasks));
    if (threads == 1) {
        for (int i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) fn(i);
        });
    }
    for (std::thread& t : pool) t.join();
}

namespace {

constexpr double kLambdaGrid[] = {0.1, 0.4, 0.7, 1.0, 1.3, 1.6};
constexpr double kEpsGrid[] = {0.1, 0.4, 0.7, 1.0, 1.3, 1.6};
constexpr int kMGrid[] = {1, 2, 3, 4, 5};
constexpr int kThetaGrid[] = {0, 1, 2, 3, 4};
constexpr long long kNGridLocal[] = {300, 400, 500, 600, 700};
constexpr Index kP = 10;

OptimizerConfig paper_config() {
    OptimizerConfig cfg;
    cfg.a = 1.0;
    cfg.b = 1.0;
    cfg.eta = 1e-3;
    cfg.iters = 300;
    cfg.record_trajectory = true;
    return cfg;
}

struct LinearVariant {
    const char* name;
    int d0;
};

std::vector<LinearVariant> linear_variants(const ExperimentPlan& plan) {
    std::vector<LinearVariant> v{{"I", 3}};
    if (plan.include_model_2 || plan.preset == Preset::paper) v.push_back({"II", 2});
    return v;
}

double final_err_sq(const FitReport& report, const Tensor& a_star) {
    Tensor diff = reconstruct(report.final);
    diff.flat() -= a_star.flat();
    return inner_full(diff, diff);
}

using TaskFn = std::function<std::vector<ResultRow>(int cell, int rep, std::uint64_t seed, RngStream& rng)>;

std::vector<ResultRow> run_tasks(const ExperimentPlan& plan, int n_cells, const TaskFn& fn,
                                 std::vector<long long>* millis_out) {
    const int reps = plan.effective_reps();
    const int total = n_cells * reps;
    std::vector<std::vector<ResultRow>> slots(static_cast<size_t>(total));
    std::vector<long long> ms(static_cast<size_t>(total), 0);
    std::vector<std::exception_ptr> errors(static_cast<size_t>(total));

    parallel_for_tasks(total, plan.effective_threads(), [&](int ti) {
        const int cell = ti / reps;
        const int rep = ti % reps;
        const std::uint64_t seed = splitmix64(splitmix64(plan.master_seed) ^ static_cast<std::uint64_t>(ti));
        RngStream rng(seed);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            slots[static_cast<size_t>(ti)] = fn(cell, rep, seed, rng);
        } catch (...) {
            errors[static_cast<size_t>(ti)] = std::current_exception();
        }
        ms[static_cast<size_t>(ti)] =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    });
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<ResultRow> rows;
    for (int ti = 0; ti < total; ++ti) {
        for (ResultRow& r : slots[static_cast<size_t>(ti)]) {
            r.millis = plan.inline_timing ? ms[static_cast<size_t>(ti)] : 0;
            rows.push_back(std::move(r));
        }
    }
    if (millis_out) *millis_out = std::move(ms);
    return rows;
}

ResultRow base_row(const ExperimentPlan& plan, const char* model, int rep, std::uint64_t seed) {
    ResultRow r;
    r.exp = plan.exp_id;
    r.model = model;
    r.rep = rep;
    r.seed = seed;
    r.method = "RGD";
    return r;
}

// Experiments 1 and 5: convergence proportion over the covariate tail grid.
std::vector<ResultRow> family_convergence(const ExperimentPlan& plan, bool logistic,
                                          std::vector<long long>* millis_out) {
    const GroundTruth truth = paper_truth(kP, 1.0);
    const std::vector<LinearVariant> variants =
        logistic ? std::vector<LinearVariant>{{"III", 3}} : linear_variants(plan);
    const int n_lambda = 6, n_m = 5;
    const int n_cells = static_cast<int>(variants.size()) * n_lambda * n_m;

    return run_tasks(
        plan, n_cells,
        [&](int cell, int rep, std::uint64_t seed, RngStream& rng) {
            const int vi = cell / (n_lambda * n_m);
            const double lambda = kLambdaGrid[(cell / n_m) % n_lambda];
            const int m = kMGrid[cell % n_m];
            const long long n = 10LL << m;
            const LinearVariant& var = variants[static_cast<size_t>(vi)];

            OptimizerConfig cfg = paper_config();
            cfg.tau = TruncationLevel::finite(std::sqrt(static_cast<double>(n) / std::log(static_cast<double>(kP))));
            const DistSpec xd = DistSpec::student(2.0 + 2.0 * lambda);

            ProblemData data;
            ModelKind kind;
            if (logistic) {
                data = generate_logistic(truth, static_cast<size_t>(n), xd, rng);
                kind = ModelKind::logistic;
            } else {
                data = generate_regression(truth, static_cast<size_t>(n), xd, DistSpec::student(1.5), var.d0, rng);
                kind = ModelKind::linear;
            }
            const FitReport report = rgd_fit(truth.factors, data, kind, cfg, &truth);
            if (report.diverged) throw RequiredRunDiverged("RGD fit diverged in experiment " + std::to_string(plan.exp_id));

            ResultRow r = base_row(plan, var.name, rep, seed);
            r.lambda = lambda;
            r.m = m;
            r.n = n;
            r.metric = "converged";
            r.value = report.converged ? 1.0 : 0.0;
            return std::vector<ResultRow>{std::move(r)};
        },
        millis_out);
}

// Experiments 2 and 8: statistical rate versus the noise tail.
std::vector<ResultRow> family_rate(const ExperimentPlan& plan, bool pca, std::vector<long long>* millis_out) {
    const GroundTruth truth = paper_truth(kP, 1.0);
    const Tensor a_star = reconstruct(truth.factors);
    const std::vector<LinearVariant> variants = pca ? std::vector<LinearVariant>{{"IV", 3}} : linear_variants(plan);
    // covariate cases for the linear model; the paper pairs Gaussian and t_3
    std::vector<DistSpec> x_cases{DistSpec::gaussian()};
    if (!pca && plan.preset == Preset::paper) x_cases.push_back(DistSpec::student(3.0));
    const int n_eps = 6, n_m = 5;
    const int n_cases = pca ? 1 : static_cast<int>(x_cases.size());
    const int n_cells = static_cast<int>(variants.size()) * n_cases * n_eps * n_m;

    return run_tasks(
        plan, n_cells,
        [&](int cell, int rep, std::uint64_t seed, RngStream& rng) {
            int c = cell;
            const int mi = c % n_m;
            c /= n_m;
            const int ei = c % n_eps;
            c /= n_eps;
            const int ci = c % n_cases;
            const int vi = c / n_cases;
            const LinearVariant& var = variants[static_cast<size_t>(vi)];
            const double eps = kEpsGrid[ei];
            const int m = kMGrid[mi];
            long long n = 200LL << m;
            if (plan.preset == Preset::desk) n = std::min(n, plan.desk_n_cap);

            OptimizerConfig cfg = paper_config();
            cfg.tau = TruncationLevel::finite(tau_rate(n, static_cast<double>(kP), std::min(1.0, eps)));
            const DistSpec ed = DistSpec::student(1.0 + eps);

            ProblemData data;
            ModelKind kind;
            if (pca) {
                data = generate_pca(truth, static_cast<size_t>(n), ed, rng);
                kind = ModelKind::pca;
            } else {
                data = generate_regression(truth, static_cast<size_t>(n), x_cases[static_cast<size_t>(ci)], ed,
                                           var.d0, rng);
                kind = ModelKind::linear;
            }
            const FitReport report = rgd_fit(truth.factors, data, kind, cfg, &truth);
            if (report.diverged) throw RequiredRunDiverged("RGD fit diverged in experiment " + std::to_string(plan.exp_id));

            ResultRow r = base_row(plan, var.name, rep, seed);
            r.dist_case = pca ? -1 : ci + 1;
            r.epsilon = eps;
            r.m = m;
            r.n = n;
            r.metric = "neg_log_err_sq";
            r.value = -std::log(final_err_sq(report, a_star));
            return std::vector<ResultRow>{std::move(r)};
        },
        millis_out);
}

// Experiments 3, 6 and 9: directional dependence through Sigma_theta.
std::vector<ResultRow> family_local_moment(const ExperimentPlan& plan, ModelKind kind,
                                           std::vector<long long>* millis_out) {
    const GroundTruth truth = paper_truth(kP, 1.0);
    const Tensor a_star = reconstruct(truth.factors);
    std::vector<LinearVariant> variants;
    switch (kind) {
        case ModelKind::linear: variants = linear_variants(plan); break;
        case ModelKind::logistic: variants = {{"III", 3}}; break;
        case ModelKind::pca: variants = {{"IV", 3}}; break;
    }
    const int n_theta = 5, n_n = 5;
    const int n_cells = static_cast<int>(variants.size()) * n_theta * n_n;

    return run_tasks(
        plan, n_cells,
        [&](int cell, int rep, std::uint64_t seed, RngStream& rng) {
            int c = cell;
            const long long n = kNGridLocal[c % n_n];
            c /= n_n;
            const int theta0 = kThetaGrid[c % n_theta];
            const LinearVariant& var = variants[static_cast<size_t>(c / n_theta)];
            const double theta = static_cast<double>(theta0) * std::numbers::pi / 8.0;

            OptimizerConfig cfg = paper_config();
            cfg.tau = TruncationLevel::finite(std::sqrt(static_cast<double>(n) / std::log(static_cast<double>(kP))));

            ProblemData data;
            switch (kind) {
                case ModelKind::linear: {
                    // scalar responses keep iid Gaussian noise; tensor-valued
                    // responses draw correlated noise as well
                    const DistSpec ed = var.d0 == 3 ? DistSpec::gaussian() : DistSpec::correlated(theta);
                    data = generate_regression(truth, static_cast<size_t>(n), DistSpec::correlated(theta), ed, var.d0,
                                               rng);
                    break;
                }
                case ModelKind::logistic:
                    data = generate_logistic(truth, static_cast<size_t>(n), DistSpec::correlated(theta), rng);
                    break;
                case ModelKind::pca:
                    data = generate_pca(truth, static_cast<size_t>(n), DistSpec::correlated(theta), rng);
                    break;
            }
            const FitReport report = rgd_fit(truth.factors, data, kind, cfg, &truth);
            if (report.diverged) throw RequiredRunDiverged("RGD fit diverged in experiment " + std::to_string(plan.exp_id));

            ResultRow r = base_row(plan, var.name, rep, seed);
            r.theta0 = theta0;
            r.n = n;
            r.metric = "err_frob";
            r.value = std::sqrt(final_err_sq(report, a_star));
            return std::vector<ResultRow>{std::move(r)};
        },
        millis_out);
}

// Experiments 4, 7 and 10: paired comparison of RGD, VGD and Huber on
// identical per-replication data with data-driven initialization.
std::vector<ResultRow> family_methods(const ExperimentPlan& plan, ModelKind kind, std::vector<long long>* millis_out) {
    const GroundTruth truth = paper_truth(kP, 1.0);
    const Tensor a_star = reconstruct(truth.factors);
    std::vector<LinearVariant> variants;
    struct Case {
        DistSpec x, e;
    };
    std::vector<Case> cases;
    bool with_huber = false;
    switch (kind) {
        case ModelKind::linear:
            variants = linear_variants(plan);
            cases = {{DistSpec::gaussian(), DistSpec::gaussian()},
                     {DistSpec::gaussian(), DistSpec::student(1.2)},
                     {DistSpec::student(2.1), DistSpec::gaussian()},
                     {DistSpec::student(2.1), DistSpec::student(1.2)}};
            with_huber = true;
            break;
        case ModelKind::logistic:
            variants = {{"III", 3}};
            cases = {{DistSpec::gaussian(), DistSpec::gaussian()}, {DistSpec::student(2.1), DistSpec::gaussian()}};
            break;
        case ModelKind::pca:
            variants = {{"IV", 3}};
            cases = {{DistSpec::gaussian(), DistSpec::gaussian()}, {DistSpec::gaussian(), DistSpec::student(1.2)}};
            with_huber = true;
            break;
    }
    const long long n = 500;
    const int n_cases = static_cast<int>(cases.size());
    const int n_cells = static_cast<int>(variants.size()) * n_cases;
    const Shape ranks{1, 1, 1};

    return run_tasks(
        plan, n_cells,
        [&, with_huber](int cell, int rep, std::uint64_t seed, RngStream& rng) {
            const int ci = cell % n_cases;
            const LinearVariant& var = variants[static_cast<size_t>(cell / n_cases)];
            const Case& cs = cases[static_cast<size_t>(ci)];

            ProblemData data;
            TuckerFactors f0;
            switch (kind) {
                case ModelKind::linear: {
                    RegressionData d =
                        generate_regression(truth, static_cast<size_t>(n), cs.x, cs.e, var.d0, rng);
                    f0 = init_linear(d, ranks, plugin_linear_init_config(d), 1.0);
                    data = std::move(d);
                    break;
                }
                case ModelKind::logistic: {
                    LogisticData d = generate_logistic(truth, static_cast<size_t>(n), cs.x, rng);
                    f0 = init_logistic(d, ranks, plugin_logistic_init_config(d), 1.0);
                    data = std::move(d);
                    break;
                }
                case ModelKind::pca: {
                    PcaData d = generate_pca(truth, static_cast<size_t>(n), cs.e, rng);
                    f0 = init_pca(d, ranks, 1.0);
                    data = std::move(d);
                    break;
                }
            }

            OptimizerConfig cv_cfg = paper_config();
            cv_cfg.iters = 100;  // ranking tau does not need the full budget
            cv_cfg.record_trajectory = false;

            std::vector<ResultRow> rows;
            auto push = [&](const char* method, const FitReport& report) {
                ResultRow r = base_row(plan, var.name, rep, seed);
                r.dist_case = ci + 1;
                r.n = n;
                r.method = method;
                r.metric = "log_err_sq";
                r.value = std::log(final_err_sq(report, a_star));
                rows.push_back(std::move(r));
            };

            // RGD with cross-validated truncation
            {
                const CvChoice cv = cross_validate_tau(data, kind, 5, kDefaultCvMultipliers, cv_cfg, f0,
                                                       splitmix64(seed ^ 0x5c5u), false);
                OptimizerConfig cfg = paper_config();
                cfg.tau = TruncationLevel::finite(cv.tau);
                const FitReport report = rgd_fit(f0, data, kind, cfg, &truth);
                if (report.diverged)
                    throw RequiredRunDiverged("RGD fit diverged in experiment " + std::to_string(plan.exp_id));
                push("RGD", report);
            }
            // vanilla gradient descent; divergence is a finding, not an error
            {
                OptimizerConfig cfg = paper_config();
                push("VGD", rgd_fit(f0, data, kind, cfg, &truth));
            }
            if (with_huber) {
                const CvChoice cv = cross_validate_tau(data, kind, 5, kDefaultCvMultipliers, cv_cfg, f0,
                                                       splitmix64(seed ^ 0x4b2u), true);
                OptimizerConfig cfg = paper_config();
                cfg.huber_nu = cv.tau;
                push("HUB", rgd_fit(f0, data, kind, cfg, &truth));
            }
            return rows;
        },
        millis_out);
}

std::vector<ResultRow> run_rows_impl(const ExperimentPlan& plan, std::vector<long long>* millis_out) {
    plan.validate();
    switch (plan.exp_id) {
        case 1: return family_convergence(plan, false, millis_out);
        case 2: return family_rate(plan, false, millis_out);
        case 3: return family_local_moment(plan, ModelKind::linear, millis_out);
        case 4: return family_methods(plan, ModelKind::linear, millis_out);
        case 5: return family_convergence(plan, true, millis_out);
        case 6: return family_local_moment(plan, ModelKind::logistic, millis_out);
        case 7: return family_methods(plan, ModelKind::logistic, millis_out);
        case 8: return family_rate(plan, true, millis_out);
        case 9: return family_local_moment(plan, ModelKind::pca, millis_out);
        case 10: return family_methods(plan, ModelKind::pca, millis_out);
        default: throw std::invalid_argument("experiment id must be in 1..10");
    }
}

}  // namespace

std::vector<ResultRow> run_experiment_rows(const ExperimentPlan& plan) { return run_rows_impl(plan, nullptr); }

namespace {

template <class D>
D subset_data(const D& d, const std::vector<int>& keep);

template <>
RegressionData subset_data(const RegressionData& d, const std::vector<int>& keep) {
    RegressionData out;
    out.d0 = d.d0;
    for (int i : keep) {
        out.xs.push_back(d.xs[static_cast<size_t>(i)]);
        out.ys.push_back(d.ys[static_cast<size_t>(i)]);
    }
    return out;
}

template <>
LogisticData subset_data(const LogisticData& d, const std::vector<int>& keep) {
    LogisticData out;
    for (int i : keep) {
        out.xs.push_back(d.xs[static_cast<size_t>(i)]);
        out.ys.push_back(d.ys[static_cast<size_t>(i)]);
    }
    return out;
}

template <>
PcaData subset_data(const PcaData& d, const std::vector<int>& keep) {
    PcaData out;
    for (int i : keep) out.ys.push_back(d.ys[static_cast<size_t>(i)]);
    return out;
}

ProblemData subset_problem(const ProblemData& data, const std::vector<int>& keep) {
    return std::visit([&](const auto& d) -> ProblemData { return subset_data(d, keep); }, data);
}

double holdout_score(const TuckerFactors& fhat, const ProblemData& val, ModelKind model) {
    const Tensor a_hat = reconstruct(fhat);
    switch (model) {
        case ModelKind::linear: {
            const auto& d = std::get<RegressionData>(val);
            double acc = 0.0;
            long long cnt = 0;
            for (size_t i = 0; i < d.n(); ++i) {
                Tensor pred = inner_generalized(a_hat, d.xs[i]);
                pred.flat() -= d.ys[i].flat();
                acc += pred.flat().array().abs().sum();
                cnt += pred.size();
            }
            return acc / static_cast<double>(cnt);
        }
        case ModelKind::logistic: {
            const auto& d = std::get<LogisticData>(val);
            double acc = 0.0;
            for (size_t i = 0; i < d.n(); ++i) {
                const double s = inner_full(d.xs[i], a_hat);
                acc += log1p_exp(s) - static_cast<double>(d.ys[i]) * s;
            }
            return acc / static_cast<double>(d.n());
        }
        case ModelKind::pca: {
            const auto& d = std::get<PcaData>(val);
            std::vector<double> resid;
            resid.reserve(d.n() * static_cast<size_t>(a_hat.size()));
            for (const Tensor& y : d.ys)
                for (Index j = 0; j < y.size(); ++j) resid.push_back(std::fabs(y[j] - a_hat[j]));
            std::sort(resid.begin(), resid.end());
            return quantile_sorted(resid, 0.5);
        }
    }
    throw std::logic_error("unreachable");
}

}  // namespace

CvChoice cross_validate_tau(const ProblemData& data, ModelKind model, int folds, std::span<const double> multipliers,
                            const OptimizerConfig& base, const TuckerFactors& f0, std::uint64_t fold_seed, bool huber,
                            double eps_eff) {
    const long long n = static_cast<long long>(std::visit([](const auto& d) { return d.n(); }, data));
    if (folds < 2) throw std::invalid_argument("cross-validation needs at least two folds");
    if (n < folds) throw std::invalid_argument("each fold needs at least one sample");
    if (multipliers.empty()) throw std::invalid_argument("empty candidate grid");

    double pbar = 1.0;
    for (Index p : f0.full_shape()) pbar = std::max(pbar, static_cast<double>(p));
    const double tau0 = tau_rate(n, pbar, eps_eff);

    CvChoice choice;
    for (double mlt : multipliers) choice.grid.push_back(mlt * tau0);
    std::sort(choice.grid.begin(), choice.grid.end());

    // seeded fold assignment
    std::vector<int> idx(static_cast<size_t>(n));
    for (long long i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = static_cast<int>(i);
    RngStream rng(splitmix64(fold_seed));
    std::shuffle(idx.begin(), idx.end(), rng);

    std::vector<ProblemData> trains, vals;
    for (int f = 0; f < folds; ++f) {
        std::vector<int> tr, va;
        for (size_t pos = 0; pos < idx.size(); ++pos) {
            (static_cast<int>(pos) % folds == f ? va : tr).push_back(idx[pos]);
        }
        trains.push_back(subset_problem(data, tr));
        vals.push_back(subset_problem(data, va));
    }

    choice.scores.assign(choice.grid.size(), 0.0);
    for (size_t g = 0; g < choice.grid.size(); ++g) {
        double score = 0.0;
        for (int f = 0; f < folds; ++f) {
            OptimizerConfig cfg = base;
            cfg.record_trajectory = false;
            if (huber) {
                cfg.huber_nu = choice.grid[g];
            } else {
                cfg.tau.tau = choice.grid[g];
            }
            const FitReport rep = rgd_fit(f0, trains[static_cast<size_t>(f)], model, cfg, nullptr);
            if (rep.diverged) {
                score = std::numeric_limits<double>::infinity();
                break;
            }
            score += holdout_score(rep.final, vals[static_cast<size_t>(f)], model) / static_cast<double>(folds);
        }
        choice.scores[g] = score;
    }
    size_t best = 0;
    for (size_t g = 1; g < choice.grid.size(); ++g)
        if (choice.scores[g] < choice.scores[best]) best = g;
    choice.tau = choice.grid[best];
    return choice;
}

namespace {

void write_plots(const std::vector<ResultRow>& rows, const ExperimentPlan& plan, std::vector<std::string>& files) {
    const std::vector<SummaryRow> sums = summarize(rows);
    std::vector<std::string> models;
    for (const SummaryRow& s : sums)
        if (std::find(models.begin(), models.end(), s.key.model) == models.end()) models.push_back(s.key.model);

    for (const std::string& model : models) {
        PlotSpec spec;
        spec.title = "Experiment " + std::to_string(plan.exp_id) + " (Model " + model + ")";
        std::map<std::string, PlotSeries> series;
        for (const SummaryRow& s : sums) {
            if (s.key.model != model) continue;
            std::string label;
            double x = 0;
            char buf[48];
            switch (plan.exp_id) {
                case 1:
                case 5:
                    std::snprintf(buf, sizeof(buf), "lambda=%g", s.key.lambda);
                    label = buf;
                    x = s.key.m;
                    spec.x_label = "m";
                    spec.y_label = "convergence proportion";
                    break;
                case 2:
                case 8:
                    std::snprintf(buf, sizeof(buf), "eps=%g", s.key.epsilon);
                    label = buf;
                    x = s.key.m;
                    spec.x_label = "m";
                    spec.y_label = "-log squared error";
                    break;
                case 3:
                case 6:
                case 9:
                    std::snprintf(buf, sizeof(buf), "theta0=%d", s.key.theta0);
                    label = buf;
                    x = static_cast<double>(s.key.n);
                    spec.x_label = "n";
                    spec.y_label = "Frobenius error";
                    break;
                default:
                    label = s.key.method;
                    x = s.key.dist_case;
                    spec.x_label = "case";
                    spec.y_label = "log squared error";
                    break;
            }
            PlotSeries& ps = series[label];
            ps.label = label;
            ps.xs.push_back(x);
            ps.ys.push_back(s.mean);
        }
        for (auto& [label, ps] : series) spec.series.push_back(ps);
        const fs::path path = fs::path(plan.out_dir) / ("exp" + std::to_string(plan.exp_id) + "_model" + model + ".svg");
        std::ofstream out(path);
        out << render_line_chart_svg(spec);
        files.push_back(path.string());
    }
}

void write_slopes(const std::vector<ResultRow>& rows, const ExperimentPlan& plan, std::vector<std::string>& files) {
    // per (model, case, epsilon): least-squares fit of the mean negative log
    // error against the effective m = log2(n / 200)
    struct Key {
        std::string model;
        int dist_case;
        double eps;
        bool operator<(const Key& o) const {
            return std::tie(model, dist_case, eps) < std::tie(o.model, o.dist_case, o.eps);
        }
    };
    std::map<Key, std::map<long long, std::pair<double, int>>> cells;
    for (const ResultRow& r : rows) {
        auto& cell = cells[{r.model, r.dist_case, r.epsilon}][r.n];
        cell.first += r.value;
        cell.second += 1;
    }
    const fs::path path = fs::path(plan.out_dir) / "slopes.csv";
    std::ofstream out(path);
    out << "exp,model,case,epsilon,slope,intercept,r2\n";
    for (const auto& [key, byn] : cells) {
        std::vector<double> xs, ys;
        for (const auto& [n, mv] : byn) {
            xs.push_back(std::log2(static_cast<double>(n) / 200.0));
            ys.push_back(mv.first / mv.second);
        }
        const LineFit fit = fit_line(xs, ys);
        char lambda_buf[32];
        std::snprintf(lambda_buf, sizeof(lambda_buf), "%.17g", key.eps);
        out << plan.exp_id << ',' << key.model << ',' << (key.dist_case < 0 ? "" : std::to_string(key.dist_case))
            << ',' << lambda_buf << ',' << fit.slope << ',' << fit.intercept << ',' << fit.r2 << '\n';
    }
    files.push_back(path.string());
}

}  // namespace

ExperimentOutput emit_outputs(const std::vector<ResultRow>& rows, const ExperimentPlan& plan,
                              const std::vector<long long>& task_millis) {
    fs::create_directories(plan.out_dir);
    ExperimentOutput out;
    out.rows = rows;

    {
        const fs::path path = fs::path(plan.out_dir) / "results.csv";
        std::ofstream f(path);
        write_results_csv(f, rows);
        out.files_written.push_back(path.string());
    }
    {
        const fs::path path = fs::path(plan.out_dir) / "summary.csv";
        std::ofstream f(path);
        write_summary_csv(f, summarize(rows));
        out.files_written.push_back(path.string());
    }
    {
        const fs::path path = fs::path(plan.out_dir) / "timing.csv";
        std::ofstream f(path);
        f << "task,millis\n";
        for (size_t i = 0; i < task_millis.size(); ++i) f << i << ',' << task_millis[i] << '\n';
        out.files_written.push_back(path.string());
    }
    if (plan.exp_id == 2 || plan.exp_id == 8) write_slopes(rows, plan, out.files_written);
    if (plan.plots) write_plots(rows, plan, out.files_written);
    return out;
}

ExperimentOutput run_experiment(const ExperimentPlan& plan) {
    std::vector<long long> millis;
    const std::vector<ResultRow> rows = run_rows_impl(plan, &millis);
    return emit_outputs(rows, plan, millis);
}

}  // namespace trgd
