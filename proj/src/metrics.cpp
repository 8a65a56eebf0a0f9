#include "adadqa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace adadqa {

std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });

    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        // positions i..j (0-based) share the average of ranks i+1..j+1
        const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

namespace {

void check_pair_sizes(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("correlation: vectors must have equal length");
    if (a.size() < 2) throw std::invalid_argument("correlation: need at least two pairs");
}

}  // namespace

double plcc(const std::vector<double>& a, const std::vector<double>& b) {
    check_pair_sizes(a, b);
    const double n = static_cast<double>(a.size());
    double mean_a = 0.0, mean_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mean_a += a[i];
        mean_b += b[i];
    }
    mean_a /= n;
    mean_b /= n;
    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (var_a == 0.0 || var_b == 0.0)
        throw std::invalid_argument("undefined correlation: constant vector");
    return cov / std::sqrt(var_a * var_b);
}

double plcc(const ScorePairs& pairs) { return plcc(pairs.predicted, pairs.labels); }

double srcc(const std::vector<double>& a, const std::vector<double>& b) {
    check_pair_sizes(a, b);
    return plcc(average_ranks(a), average_ranks(b));
}

double srcc(const ScorePairs& pairs) { return srcc(pairs.predicted, pairs.labels); }

double mean_metric(double srcc_value, double plcc_value) {
    return 0.5 * (srcc_value + plcc_value);
}

namespace {

// Sample mean and n-1 standard deviation; a constant sample reports its
// value and exactly zero spread.
std::pair<double, double> mean_and_std(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const bool constant = std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
    if (constant) return {v[0], 0.0};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
}

}  // namespace

RepeatSummary aggregate_repeats(const std::vector<EvalResult>& results) {
    if (results.empty()) throw std::invalid_argument("aggregate_repeats: empty result list");
    RepeatSummary s;
    s.n_runs = static_cast<int>(results.size());
    std::vector<double> srccs, plccs;
    srccs.reserve(results.size());
    plccs.reserve(results.size());
    for (const auto& r : results) {
        srccs.push_back(r.srcc);
        plccs.push_back(r.plcc);
    }
    std::tie(s.mean_srcc, s.std_srcc) = mean_and_std(srccs);
    std::tie(s.mean_plcc, s.std_plcc) = mean_and_std(plccs);
    return s;
}

}  // namespace adadqa
