#include "splinedyn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "splinedyn/errors.hpp"

namespace splinedyn {

namespace {

double rmse_of(std::span<const double> measured, std::span<const double> predicted) {
    double acc = 0.0;
    for (std::size_t k = 0; k < measured.size(); ++k) {
        const double e = measured[k] - predicted[k];
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(measured.size()));
}

std::string num2(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.2f", value);
    return buf;
}

std::string num4(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4f", value);
    return buf;
}

}  // namespace

double nrmse(std::span<const double> measured, std::span<const double> predicted) {
    if (measured.size() != predicted.size()) throw ConfigError("series length mismatch");
    if (measured.size() < 2) throw ConfigError("need at least two samples");
    const auto [lo, hi] = std::minmax_element(measured.begin(), measured.end());
    const double range = *hi - *lo;
    if (range == 0.0) throw NumericError("degenerate range: measured series is constant");
    return rmse_of(measured, predicted) / range;
}

double gof(std::span<const double> measured, std::span<const double> predicted) {
    return (1.0 - nrmse(measured, predicted)) * 100.0;
}

FitReport make_report(std::string method, int order, int partition_count,
                      std::span<const double> measured, std::span<const double> predicted,
                      double runtime_seconds, std::string dataset) {
    FitReport report;
    report.method = std::move(method);
    report.order = order;
    report.partition_count = partition_count;
    report.nrmse = nrmse(measured, predicted);
    report.gof_percent = (1.0 - report.nrmse) * 100.0;
    report.rmse = rmse_of(measured, predicted);
    report.n_samples = static_cast<int>(measured.size());
    report.runtime_seconds = runtime_seconds;
    report.dataset = std::move(dataset);
    return report;
}

std::string ComparisonTable::to_csv() const {
    std::ostringstream oss;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        oss << columns[c] << (c + 1 < columns.size() ? "," : "\n");
    }
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            oss << row[c] << (c + 1 < row.size() ? "," : "\n");
        }
    }
    return oss.str();
}

std::string ComparisonTable::to_text() const {
    std::vector<std::size_t> widths(columns.size(), 0);
    for (std::size_t c = 0; c < columns.size(); ++c) widths[c] = columns[c].size();
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    }
    std::ostringstream oss;
    auto emit = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            oss << cells[c];
            if (c + 1 < cells.size()) oss << std::string(widths[c] - cells[c].size() + 2, ' ');
        }
        oss << '\n';
    };
    emit(columns);
    for (const auto& row : rows) emit(row);
    return oss.str();
}

ComparisonTable compare_report(std::span<const FitReport> reports) {
    if (reports.empty()) throw ConfigError("compare_report needs at least one report");
    std::vector<FitReport> sorted(reports.begin(), reports.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const FitReport& a, const FitReport& b) {
        if (a.method != b.method) return a.method < b.method;
        return a.order < b.order;
    });

    auto is_spline = [](const FitReport& r) { return r.method.find("spline") != std::string::npos; };

    ComparisonTable table;
    table.columns = {"method", "order", "partitions", "dataset", "n",
                     "rmse",   "nrmse", "gof_percent", "runtime_s", "speedup_vs_spline"};
    for (const auto& r : sorted) {
        std::string speedup;
        if (!is_spline(r)) {
            for (const auto& s : sorted) {
                if (is_spline(s) && s.order == r.order && s.runtime_seconds > 0.0) {
                    speedup = num2(r.runtime_seconds / s.runtime_seconds);
                    break;
                }
            }
        }
        table.rows.push_back({r.method, std::to_string(r.order), std::to_string(r.partition_count),
                              r.dataset, std::to_string(r.n_samples), num4(r.rmse), num4(r.nrmse),
                              num2(r.gof_percent), num4(r.runtime_seconds), speedup});
    }
    return table;
}

}  // namespace splinedyn
