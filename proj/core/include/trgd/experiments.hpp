#pragma once

#include "trgd/init.hpp"
#include "trgd/local_moments.hpp"
#include "trgd/optimizer.hpp"
#include "trgd/result_io.hpp"

#include <functional>
#include <span>
#include <stdexcept>

namespace trgd {

enum class Preset { desk, paper };

// A configured run of one of the ten simulation experiments. The desk preset
// trades replications (25 vs 200) and caps n at 4000 so every experiment
// finishes at workstation scale; grids are never changed.
struct ExperimentPlan {
    int exp_id = 1;  // 1..10
    Preset preset = Preset::desk;
    std::uint64_t master_seed = 20250401;
    int reps = 0;     // 0 = preset default
    int threads = 0;  // 0 = TRGD_THREADS env, then hardware concurrency
    std::string out_dir = "trgd-out";
    bool plots = false;
    // results.csv is byte-deterministic by default: row timings go to the
    // timing.csv sidecar and the millis column stays 0. --timing inlines
    // measured values at the cost of re-run identity.
    bool inline_timing = false;
    long long desk_n_cap = 4000;
    bool include_model_2 = false;  // second linear model in experiments 1-4

    int effective_reps() const;
    int effective_threads() const;
    void validate() const;
};

struct ExperimentOutput {
    std::vector<ResultRow> rows;
    std::vector<std::string> files_written;
};

// All replication rows for the plan, in deterministic grid-then-replication
// order regardless of worker count.
std::vector<ResultRow> run_experiment_rows(const ExperimentPlan& plan);

// run_experiment_rows plus results.csv / summary.csv / timing.csv emission
// (slopes.csv for the rate experiments, SVG charts when requested).
ExperimentOutput run_experiment(const ExperimentPlan& plan);

ExperimentOutput emit_outputs(const std::vector<ResultRow>& rows, const ExperimentPlan& plan,
                              const std::vector<long long>& task_millis = {});

// The ground truth used across all simulation experiments:
// A* = sqrt(10) 1_p x 1_p x 1_p with b-balanced rank-1 factors.
GroundTruth paper_truth(Index p = 10, double b = 1.0);

// Rate-based truncation level (n / log pbar)^(1/(1+eps_eff)).
double tau_rate(long long n, double pbar, double eps_eff);

struct CvChoice {
    double tau = 0.0;            // selected level (or Huber nu)
    std::vector<double> grid;    // absolute candidate levels
    std::vector<double> scores;  // mean held-out score per candidate
};

// Five-fold style cross-validation of the truncation level over
// multiplier * tau_rate(n, eps_eff) candidates. Scoring: mean absolute
// prediction error (linear), mean negative log-likelihood (logistic),
// median absolute reconstruction residual (pca). Ties go to the smallest
// candidate. With huber = true the candidates tune the residual threshold.
CvChoice cross_validate_tau(const ProblemData& data, ModelKind model, int folds, std::span<const double> multipliers,
                            const OptimizerConfig& base, const TuckerFactors& f0, std::uint64_t fold_seed,
                            bool huber = false, double eps_eff = 1.0);

inline constexpr double kDefaultCvMultipliers[] = {0.25, 0.5, 1.0, 2.0, 4.0};

// NaN/Inf divergence in a run whose result the experiment requires (an RGD
// fit); the vanilla/Huber baselines may diverge and are recorded instead.
struct RequiredRunDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Static work queue over task indices; at most `threads` workers.
void parallel_for_tasks(int n_tasks, int threads, const std::function<void(int)>& fn);

}  // namespace trgd
