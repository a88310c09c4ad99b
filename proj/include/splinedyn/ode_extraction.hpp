#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "splinedyn/smoothing.hpp"
#include "splinedyn/trace.hpp"

namespace splinedyn {

/// Voltage partitioning of the operating range: strictly increasing edges
/// defining count() = edges.size() - 1 intervals.
struct PartitionSpec {
    std::vector<double> edges;

    [[nodiscard]] int count() const noexcept { return static_cast<int>(edges.size()) - 1; }
    static PartitionSpec uniform(double lo, double hi, int k);
    void validate() const;
};

/// Per-interval linear model I = A V + sum_k g_k d^k I/dt^k + C fitted by
/// ordinary least squares.
struct PartitionCoefficients {
    double voltage_gain = 0.0;             ///< A
    std::vector<double> derivative_gains;  ///< one per derivative order (B, ...)
    double intercept = 0.0;                ///< trailing constant
    int sample_count = 0;
    double rss = 0.0;
    bool degenerate = false;               ///< under-sampled; coefficients inherited
    int inherited_from = -1;
    bool voltage_dropped = false;          ///< rank fallback forced A = 0
    bool stable = false;                   ///< first derivative gain < 0 (order-1 reading)
};

struct PartitionedODEModel {
    PartitionSpec spec;
    int order = 1;
    std::vector<PartitionCoefficients> partitions;
    double dt = 0.0;  ///< sample step of the training trace

    void validate() const;
};

/// Analytic spline derivatives d^k I/dt^k, k = 1..max_order, one column each.
Eigen::MatrixXd compute_derivatives(const SmoothFit& fit, std::span<const double> t, int max_order);

/// Interval index of a single value (no validation; hot-loop helper).
int partition_of(const PartitionSpec& spec, double v);

/// Interval index per sample: edges[i] <= v < edges[i+1], last edge inclusive,
/// values outside the range clamped to the end intervals.
std::vector<int> assign_partitions(const PartitionSpec& spec, std::span<const double> v);

/// OLS of the current on [V, derivatives..., 1]. Rank deficiency (constant V
/// under step excitation) falls back to dropping the voltage column.
PartitionCoefficients fit_partition_ode(const Eigen::VectorXd& current, const Eigen::VectorXd& voltage,
                                        const Eigen::MatrixXd& derivatives, int order);

struct ExtractionSettings {
    int degree = 3;
    double knot_spacing = 0.01;  ///< seconds between time-domain knots (grid_size = 0)
    int grid_size = 0;           ///< explicit span count; 0 derives it from knot_spacing
    double lambda = 1e-8;
    int penalty_order = 2;
    bool use_ocv = false;
    std::vector<double> lambda_grid;  ///< empty = default log grid 1e-8..1e2
    bool parallel = false;
};

struct ExtractionResult {
    PartitionedODEModel model;
    SmoothFit smooth;
    Eigen::VectorXd insample_prediction;  ///< per-sample regression prediction
    std::vector<int> partition_index;
    double lambda_used = 0.0;
};

/// Full pipeline on a (pre-trimmed) trace: time-domain smooth, derivatives,
/// partition, per-partition regressions.
ExtractionResult extract_model(const Trace& trace, const ExtractionSettings& settings,
                               const PartitionSpec& spec, int order);

/// Regression prediction of an already-extracted model on new data, using
/// derivatives from a smooth fit of that data's current.
Eigen::VectorXd regression_predict(const PartitionedODEModel& model, std::span<const double> v,
                                   const Eigen::MatrixXd& derivatives);

std::vector<double> default_lambda_grid();

}  // namespace splinedyn
