#pragma once

#include <span>
#include <string>
#include <vector>

namespace splinedyn {

/// Accuracy/runtime summary of one fitted model on one dataset.
struct FitReport {
    std::string method;
    int order = 0;
    int partition_count = 0;
    double gof_percent = 0.0;
    double nrmse = 0.0;
    double rmse = 0.0;
    int n_samples = 0;
    double runtime_seconds = 0.0;
    std::string dataset;
};

/// Root mean squared error normalized by the measured range
/// (max(measured) - min(measured)). A constant measured series is an error.
double nrmse(std::span<const double> measured, std::span<const double> predicted);

/// Goodness of fit in percent: (1 - NRMSE) * 100.
double gof(std::span<const double> measured, std::span<const double> predicted);

FitReport make_report(std::string method, int order, int partition_count,
                      std::span<const double> measured, std::span<const double> predicted,
                      double runtime_seconds, std::string dataset);

struct ComparisonTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::string to_csv() const;
    [[nodiscard]] std::string to_text() const;
};

/// Rows sorted by method then order. Non-spline rows carry the runtime ratio
/// against the spline row of the same order (blank when there is none).
ComparisonTable compare_report(std::span<const FitReport> reports);

}  // namespace splinedyn
