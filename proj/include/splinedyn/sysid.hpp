#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "splinedyn/ode_extraction.hpp"
#include "splinedyn/trace.hpp"

namespace splinedyn {

/// Per-partition discrete transfer function fitted as an equation-error (ARX)
/// least-squares problem:
///   I_k = -a_1 I_{k-1} - ... - a_n I_{k-n} + b_0 V_k + ... + b_m V_{k-m}.
struct ArxPartition {
    std::vector<double> a;  ///< denominator coefficients a_1..a_n
    std::vector<double> b;  ///< numerator coefficients b_0..b_m
    bool stable = false;    ///< all poles strictly inside the unit circle
    bool degenerate = false;
    bool rank_deficient = false;
    int inherited_from = -1;
    int sample_count = 0;
};

struct ARXModel {
    PartitionSpec spec;
    int n = 1;  ///< pole count
    int m = 1;  ///< zero count
    double dt = 0.0;
    std::vector<ArxPartition> partitions;
    double train_i_min = 0.0;
    double train_i_max = 0.0;
};

/// Fit per-partition ARX(n, m) models. The first max(n, m) rows are dropped
/// (initial-condition handling); each remaining row joins the partition of
/// its V_k. Under-sampled partitions inherit the nearest populated one.
ARXModel fit_arx(std::span<const double> current, std::span<const double> voltage,
                 std::span<const int> partition_index, const PartitionSpec& spec, int n, int m,
                 double dt);

struct ArxSimResult {
    Trace trace;
    bool range_exceeded = false;  ///< output left 10x the training range
};

/// Free-run simulation: predicted outputs are fed back; partition per V_k.
/// init supplies the n outputs preceding the first sample.
ArxSimResult simulate_arx(const ARXModel& model, const Trace& voltage, std::span<const double> init);

/// One-step-ahead prediction on a measured trace (measured outputs fed in).
Trace predict_arx_one_step(const ARXModel& model, const Trace& measured);

struct BenchmarkRow {
    std::string method;
    int order = 0;
    double median_seconds = 0.0;
    std::vector<double> run_seconds;
    double insample_gof = 0.0;
};

/// Median-of-repeats wall-clock fit time per order for both pipelines on the
/// same trace. The spline fits reuse one smoothing degree (high enough for
/// the largest order) so the scan varies only the extraction order.
std::vector<BenchmarkRow> benchmark_orders(const Trace& training, const ExtractionSettings& spline_settings,
                                           const PartitionSpec& spec, std::span<const int> orders,
                                           int arx_zero_count, int repeats);

}  // namespace splinedyn
