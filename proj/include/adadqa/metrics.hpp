#pragma once

#include <vector>

#include "adadqa/core.hpp"

namespace adadqa {

struct ScorePairs {
    std::vector<double> predicted;
    std::vector<double> labels;
};

// Average (fractional) ranks, 1-based; tied values share the mean of the
// ranks they span.
std::vector<double> average_ranks(const std::vector<double>& v);

// Pearson linear correlation. Throws std::invalid_argument when either
// vector is constant (undefined correlation) or lengths differ / are < 2.
double plcc(const ScorePairs& pairs);
double plcc(const std::vector<double>& a, const std::vector<double>& b);

// Spearman rank-order correlation: Pearson on the average-rank vectors.
double srcc(const ScorePairs& pairs);
double srcc(const std::vector<double>& a, const std::vector<double>& b);

double mean_metric(double srcc_value, double plcc_value);

struct RepeatSummary {
    double mean_srcc = 0.0;
    double std_srcc = 0.0;
    double mean_plcc = 0.0;
    double std_plcc = 0.0;
    int n_runs = 0;
};

// Per-metric sample mean and sample standard deviation (n-1 denominator,
// zero when n = 1) over repeated evaluation runs.
RepeatSummary aggregate_repeats(const std::vector<EvalResult>& results);

}  // namespace adadqa
