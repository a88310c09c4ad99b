#pragma once

#include <cstdint>

#include "splinedyn/trace.hpp"

namespace splinedyn {

/// IEEE-1547-style piecewise-linear Volt-Var curve. Breakpoint reactive
/// outputs are in p.u. of rated capacity; Q2 = Q3 = 0 is the deadband.
struct VoltVarCurve {
    double v_l = 0.88, v1 = 0.92, v2 = 0.98, v3 = 1.02, v4 = 1.08, v_h = 1.10;
    double q1 = 0.7, q2 = 0.0, q3 = 0.0, q4 = -0.7;

    void validate() const;
};

/// First-order-lag aggregate of n_houses identical Volt-Var inverters.
///
/// The current obeys dI/dt = (n_houses * q*(V_meas) - I) / tau. With
/// v_meas_tau = 0 the inverters see the input voltage directly; a positive
/// value low-pass filters the input first (dV_meas/dt = (V_in - V_meas) /
/// v_meas_tau), standing in for the finite bandwidth of a measured bus
/// voltage, and the filtered value is what the output trace records.
struct PlantConfig {
    VoltVarCurve curve;
    double tau = 0.05;          ///< seconds, aggregate response lag
    double noise_sigma = 0.005; ///< p.u., additive Gaussian on recorded current
    int n_houses = 36;
    std::uint64_t seed = 0;
    double v_meas_tau = 0.0;    ///< seconds, voltage measurement lag (0 = none)
    double initial_current = 0.0;

    void validate() const;
};

/// Static curve lookup: Q1 below V1, linear to the deadband, 0 inside it,
/// linear to Q4, Q4 above V4.
double voltvar_target(const VoltVarCurve& curve, double v);

/// RK4 integration at the trace sample step, then seeded Gaussian noise on
/// the recorded current. A note is attached to the result when the sample
/// step is large relative to the configured lags (dt > tau/2).
Trace simulate_plant(const PlantConfig& cfg, const Trace& voltage);

}  // namespace splinedyn
