// Experiment harness for robust low-rank tensor estimation.
//
//   trgd run --exp <1..10> --preset <desk|paper> --seed <u64> --out <dir>
//   trgd cv  --model <linear|logistic|pca> --config <file>
//
// Every flag can also be set through a TOML config file (--config); command
// line values win over the file, the file over built-in defaults.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "trgd/experiments.hpp"
#include "trgd/rng.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitDivergence = 3;

struct CvOptions {
    std::string model;       // linear | logistic | pca
    std::string model_type;  // config-file alternative to --model
    std::vector<long long> dims{10, 10, 10};
    std::vector<long long> ranks{1, 1, 1};
    int d0 = 3;

    double a = 1.0, b = 1.0, eta = 1e-3;
    int iters = 300;

    std::string x_family = "gaussian";  // gaussian | student | correlated
    double x_dof = 3.0, x_theta = 0.0;
    std::string e_family = "gaussian";
    double e_dof = 1.5, e_theta = 0.0;

    long long n = 500;
    std::uint64_t seed = 1;
    int folds = 5;
    double eps_eff = 1.0;
    std::vector<double> grid{0.25, 0.5, 1.0, 2.0, 4.0};
};

trgd::DistSpec parse_dist(const std::string& family, double dof, double theta) {
    if (family == "gaussian") return trgd::DistSpec::gaussian();
    if (family == "student") return trgd::DistSpec::student(dof);
    if (family == "correlated") return trgd::DistSpec::correlated(theta);
    throw CLI::ValidationError("distribution family must be gaussian, student or correlated");
}

int run_cv(const CvOptions& opt) {
    using namespace trgd;
    const std::string kind_name = opt.model.empty() ? opt.model_type : opt.model;
    ModelKind kind;
    if (kind_name == "linear")
        kind = ModelKind::linear;
    else if (kind_name == "logistic")
        kind = ModelKind::logistic;
    else if (kind_name == "pca")
        kind = ModelKind::pca;
    else
        throw CLI::ValidationError("--model must be linear, logistic or pca");

    Shape dims(opt.dims.begin(), opt.dims.end());
    Shape ranks(opt.ranks.begin(), opt.ranks.end());
    if (dims.size() != ranks.size()) throw CLI::ValidationError("dims and ranks must have equal length");

    // simulation ground truth: the rank-1 all-ones construction when every
    // rank is one, a seeded random decomposition otherwise
    TuckerFactors raw;
    RngStream trng = make_stream(opt.seed, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const bool rank1 = std::all_of(ranks.begin(), ranks.end(), [](Index r) { return r == 1; });
    raw.core = Tensor(ranks);
    for (Index i = 0; i < raw.core.size(); ++i) raw.core[i] = rank1 ? std::sqrt(10.0) : normal(trng);
    for (size_t k = 0; k < dims.size(); ++k) {
        Matrix u(dims[k], ranks[k]);
        for (Index i = 0; i < u.size(); ++i) u.data()[i] = rank1 ? 1.0 : normal(trng);
        raw.factors.push_back(std::move(u));
    }
    const GroundTruth truth = GroundTruth::balanced(raw, opt.b);

    const DistSpec xd = parse_dist(opt.x_family, opt.x_dof, opt.x_theta);
    const DistSpec ed = parse_dist(opt.e_family, opt.e_dof, opt.e_theta);
    RngStream rng = make_stream(opt.seed, 1);

    ProblemData data;
    TuckerFactors f0;
    switch (kind) {
        case ModelKind::linear: {
            RegressionData d = generate_regression(truth, static_cast<size_t>(opt.n), xd, ed, opt.d0, rng);
            f0 = init_linear(d, ranks, plugin_linear_init_config(d), opt.b);
            data = std::move(d);
            break;
        }
        case ModelKind::logistic: {
            LogisticData d = generate_logistic(truth, static_cast<size_t>(opt.n), xd, rng);
            f0 = init_logistic(d, ranks, plugin_logistic_init_config(d), opt.b);
            data = std::move(d);
            break;
        }
        case ModelKind::pca: {
            PcaData d = generate_pca(truth, static_cast<size_t>(opt.n), ed, rng);
            f0 = init_pca(d, ranks, opt.b);
            data = std::move(d);
            break;
        }
    }

    OptimizerConfig cfg;
    cfg.a = opt.a;
    cfg.b = opt.b;
    cfg.eta = opt.eta;
    cfg.iters = opt.iters;
    cfg.record_trajectory = false;

    const CvChoice choice =
        cross_validate_tau(data, kind, opt.folds, opt.grid, cfg, f0, opt.seed, false, opt.eps_eff);
    std::printf("# tau candidates and mean held-out scores\n");
    for (size_t g = 0; g < choice.grid.size(); ++g)
        std::printf("tau=%-12.6g score=%.8g\n", choice.grid[g], choice.scores[g]);
    std::printf("selected tau = %.8g\n", choice.tau);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"robust gradient descent for low-rank tensor models"};
    app.require_subcommand(1);

    trgd::ExperimentPlan plan;
    std::string preset = "desk";

    CLI::App* run = app.add_subcommand("run", "run one of the simulation experiments");
    run->set_config("--config", "", "TOML config file; command line overrides it");
    run->add_option("--exp", plan.exp_id, "experiment id (1..10)")->required()->check(CLI::Range(1, 10));
    run->add_option("--preset", preset, "desk or paper scale")->check(CLI::IsMember({"desk", "paper"}));
    run->add_option("--seed", plan.master_seed, "master seed");
    run->add_option("--out", plan.out_dir, "output directory");
    run->add_option("--reps", plan.reps, "replications per grid point (0 = preset default)");
    run->add_option("--threads", plan.threads, "worker threads (0 = TRGD_THREADS env, then hardware)");
    run->add_flag("--plots", plan.plots, "emit SVG line charts next to the CSV files");
    run->add_flag("--timing", plan.inline_timing,
                  "record wall time in the results.csv millis column (breaks re-run byte identity)");
    run->add_flag("--model2,--experiment.model2", plan.include_model_2,
                  "also run the second linear model in experiments 1-4");

    CvOptions cv;
    CLI::App* cvc = app.add_subcommand("cv", "standalone truncation-level cross-validation");
    cvc->set_config("--config", "", "TOML config file; command line overrides it");
    cvc->add_option("--model", cv.model, "linear, logistic or pca");
    cvc->add_option("--model.type", cv.model_type, "model kind (config-file form of --model)");
    cvc->add_option("--model.dims", cv.dims, "tensor dimensions");
    cvc->add_option("--model.ranks", cv.ranks, "Tucker ranks");
    cvc->add_option("--model.d0", cv.d0, "covariate order of the linear model");
    cvc->add_option("--optimizer.a", cv.a, "regularization weight");
    cvc->add_option("--optimizer.b", cv.b, "balance scale");
    cvc->add_option("--optimizer.eta", cv.eta, "step size");
    cvc->add_option("--optimizer.iters", cv.iters, "iterations per fold fit");
    cvc->add_option("--distribution.x_family", cv.x_family, "covariate family: gaussian|student|correlated");
    cvc->add_option("--distribution.x_dof", cv.x_dof, "covariate Student-t dof");
    cvc->add_option("--distribution.x_theta", cv.x_theta, "covariate correlation angle");
    cvc->add_option("--distribution.e_family", cv.e_family, "noise family");
    cvc->add_option("--distribution.e_dof", cv.e_dof, "noise Student-t dof");
    cvc->add_option("--distribution.e_theta", cv.e_theta, "noise correlation angle");
    cvc->add_option("--experiment.n", cv.n, "sample count");
    cvc->add_option("--experiment.seed", cv.seed, "data seed");
    cvc->add_option("--experiment.folds", cv.folds, "cross-validation folds");
    cvc->add_option("--experiment.eps_eff", cv.eps_eff, "effective epsilon of the rate-based level");
    cvc->add_option("--experiment.grid", cv.grid, "candidate multipliers of the rate-based level");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfigError;
    }

    try {
        if (run->parsed()) {
            plan.preset = (preset == "paper") ? trgd::Preset::paper : trgd::Preset::desk;
            plan.validate();
            const trgd::ExperimentOutput out = trgd::run_experiment(plan);
            std::printf("experiment %d: %zu rows\n", plan.exp_id, out.rows.size());
            for (const std::string& f : out.files_written) std::printf("wrote %s\n", f.c_str());
            return 0;
        }
        return run_cv(cv);
    } catch (const trgd::RequiredRunDiverged& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitDivergence;
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfigError;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
