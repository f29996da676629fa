#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace trgd {

// One metric observation. Grid coordinates that do not apply to an
// experiment stay at their NA defaults (-1 for integers, NaN for reals) and
// serialize as empty fields.
struct ResultRow {
    int exp = 0;
    std::string model;  // I | II | III | IV
    int dist_case = -1;
    double lambda = std::numeric_limits<double>::quiet_NaN();
    double epsilon = std::numeric_limits<double>::quiet_NaN();
    int theta0 = -1;
    int m = -1;
    long long n = -1;
    int rep = 0;
    std::uint64_t seed = 0;
    std::string method;  // RGD | VGD | HUB
    std::string metric;  // err_sq_final | neg_log_err_sq | converged | err_frob | log_err_sq
    double value = 0.0;
    long long millis = 0;

    bool operator==(const ResultRow& o) const;
};

inline constexpr const char* kResultsHeader = "exp,model,case,lambda,epsilon,theta0,m,n,rep,seed,method,metric,value,millis";

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_results_csv(std::istream& in);

// Grouped statistics over the metric values; one group per distinct
// coordinate tuple, in first-appearance order.
struct SummaryRow {
    ResultRow key;  // rep/seed/value/millis unused
    size_t count = 0;
    double mean = 0.0;
    double q25 = 0.0, q50 = 0.0, q75 = 0.0;
};

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

// Least-squares line fit, for the slope criteria of the rate experiments.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};
LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys);

double quantile_sorted(const std::vector<double>& sorted, double q);

}  // namespace trgd
