#pragma once

#include <vector>

#include "splinedyn/ode_extraction.hpp"
#include "splinedyn/trace.hpp"

namespace splinedyn {

/// One partition of the Backward Euler update
/// I_{k+1} = I_k / (1 - D) - D / (1 - D) * (A V_{k+1} + C), with D = dt / B.
struct DiscretePartition {
    double voltage_gain = 0.0;  ///< A
    double intercept = 0.0;     ///< C
    double d = 0.0;             ///< dt / B
    double gain = 1.0;          ///< 1 / (1 - D); |gain| < 1 marks a stable update
    bool stable = false;
};

struct DiscreteModel {
    PartitionSpec spec;
    std::vector<DiscretePartition> partitions;
    double dt = 0.0;
};

/// Backward Euler discretization of an order-1 model. Partitions with B = 0
/// have no dynamics to discretize and raise NumericError naming the partition.
DiscreteModel discretize(const PartitionedODEModel& model, double dt);

/// One update step; the partition is selected by the incoming voltage V_{k+1}
/// (clamped at the range ends).
double step(const DiscreteModel& dm, double current, double v_next);

/// Free-run prediction over a voltage trace sampled at the model's dt.
/// A finer trace whose step divides dt is subsampled when allow_resample is
/// set; any other mismatch is an error.
Trace simulate(const DiscreteModel& dm, const Trace& voltage, double initial_current,
               bool allow_resample = false);

/// Reference integrator: classical RK4 on dI/dt = (I - A V - C) / B with the
/// given number of sub-intervals per sample and linear interpolation of the
/// voltage inside each sample interval. Used for convergence testing.
Trace rk4_oracle(const PartitionedODEModel& model, const Trace& voltage, double initial_current,
                 int substeps);

}  // namespace splinedyn
