#include "trgd/result_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace trgd {

namespace {

bool double_eq_na(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

std::string fmt_double(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_int_na(long long v) { return v < 0 ? std::string{} : std::to_string(v); }

double parse_double_na(const std::string& s) {
    if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::stod(s);
}

long long parse_int_na(const std::string& s) { return s.empty() ? -1 : std::stoll(s); }

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

bool ResultRow::operator==(const ResultRow& o) const {
    return exp == o.exp && model == o.model && dist_case == o.dist_case && double_eq_na(lambda, o.lambda) &&
           double_eq_na(epsilon, o.epsilon) && theta0 == o.theta0 && m == o.m && n == o.n && rep == o.rep &&
           seed == o.seed && method == o.method && metric == o.metric && double_eq_na(value, o.value) &&
           millis == o.millis;
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << kResultsHeader << '\n';
    for (const ResultRow& r : rows) {
        out << r.exp << ',' << r.model << ',' << fmt_int_na(r.dist_case) << ',' << fmt_double(r.lambda) << ','
            << fmt_double(r.epsilon) << ',' << fmt_int_na(r.theta0) << ',' << fmt_int_na(r.m) << ',' << fmt_int_na(r.n)
            << ',' << r.rep << ',' << r.seed << ',' << r.method << ',' << r.metric << ',' << fmt_double(r.value) << ','
            << r.millis << '\n';
    }
}

std::vector<ResultRow> parse_results_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) return {};
    if (line != kResultsHeader) throw std::runtime_error("unexpected results.csv header");
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 14) throw std::runtime_error("malformed results.csv row");
        ResultRow r;
        r.exp = static_cast<int>(std::stoll(f[0]));
        r.model = f[1];
        r.dist_case = static_cast<int>(parse_int_na(f[2]));
        r.lambda = parse_double_na(f[3]);
        r.epsilon = parse_double_na(f[4]);
        r.theta0 = static_cast<int>(parse_int_na(f[5]));
        r.m = static_cast<int>(parse_int_na(f[6]));
        r.n = parse_int_na(f[7]);
        r.rep = static_cast<int>(std::stoll(f[8]));
        r.seed = std::stoull(f[9]);
        r.method = f[10];
        r.metric = f[11];
        r.value = parse_double_na(f[12]);
        r.millis = std::stoll(f[13]);
        rows.push_back(std::move(r));
    }
    return rows;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    if (sorted.size() == 1) return sorted[0];
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
    auto key_of = [](const ResultRow& r) {
        std::ostringstream os;
        os << r.exp << '|' << r.model << '|' << r.dist_case << '|' << fmt_double(r.lambda) << '|'
           << fmt_double(r.epsilon) << '|' << r.theta0 << '|' << r.m << '|' << r.n << '|' << r.method << '|'
           << r.metric;
        return os.str();
    };
    std::vector<SummaryRow> out;
    std::map<std::string, size_t> index;
    std::vector<std::vector<double>> values;
    for (const ResultRow& r : rows) {
        const std::string key = key_of(r);
        auto it = index.find(key);
        if (it == index.end()) {
            index.emplace(key, out.size());
            SummaryRow s;
            s.key = r;
            s.key.rep = 0;
            s.key.seed = 0;
            s.key.value = 0;
            s.key.millis = 0;
            out.push_back(std::move(s));
            values.emplace_back();
            it = index.find(key);
        }
        values[it->second].push_back(r.value);
    }
    for (size_t i = 0; i < out.size(); ++i) {
        std::vector<double>& v = values[i];
        std::sort(v.begin(), v.end());
        double mean = 0.0;
        for (double x : v) mean += x;
        out[i].count = v.size();
        out[i].mean = mean / static_cast<double>(v.size());
        out[i].q25 = quantile_sorted(v, 0.25);
        out[i].q50 = quantile_sorted(v, 0.50);
        out[i].q75 = quantile_sorted(v, 0.75);
    }
    return out;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << "exp,model,case,lambda,epsilon,theta0,m,n,method,metric,count,mean,q25,q50,q75\n";
    for (const SummaryRow& s : rows) {
        const ResultRow& k = s.key;
        out << k.exp << ',' << k.model << ',' << fmt_int_na(k.dist_case) << ',' << fmt_double(k.lambda) << ','
            << fmt_double(k.epsilon) << ',' << fmt_int_na(k.theta0) << ',' << fmt_int_na(k.m) << ',' << fmt_int_na(k.n)
            << ',' << k.method << ',' << k.metric << ',' << s.count << ',' << fmt_double(s.mean) << ','
            << fmt_double(s.q25) << ',' << fmt_double(s.q50) << ',' << fmt_double(s.q75) << '\n';
    }
}

LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("fit_line needs at least two points");
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    LineFit fit;
    const double denom = n * sxx - sx * sx;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double ybar = sy / n;
    for (size_t i = 0; i < xs.size(); ++i) {
        const double pred = fit.intercept + fit.slope * xs[i];
        ss_res += (ys[i] - pred) * (ys[i] - pred);
        ss_tot += (ys[i] - ybar) * (ys[i] - ybar);
    }
    fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

}  // namespace trgd
