#include "splinedyn/discrete_sim.hpp"

#include <cmath>

#include "splinedyn/errors.hpp"

namespace splinedyn {

DiscreteModel discretize(const PartitionedODEModel& model, double dt) {
    model.validate();
    if (model.order != 1) throw ConfigError("only order-1 models are discretized");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");

    DiscreteModel dm;
    dm.spec = model.spec;
    dm.dt = dt;
    dm.partitions.reserve(model.partitions.size());
    for (std::size_t p = 0; p < model.partitions.size(); ++p) {
        const auto& rec = model.partitions[p];
        const double b = rec.derivative_gains[0];
        if (b == 0.0) {
            throw NumericError("partition " + std::to_string(p) +
                               " has B = 0 (no dynamics); cannot discretize");
        }
        DiscretePartition dp;
        dp.voltage_gain = rec.voltage_gain;
        dp.intercept = rec.intercept;
        dp.d = dt / b;
        const double denom = 1.0 - dp.d;
        if (denom == 0.0) {
            throw NumericError("partition " + std::to_string(p) + " has D = 1 (singular update)");
        }
        dp.gain = 1.0 / denom;
        dp.stable = std::abs(dp.gain) < 1.0;
        dm.partitions.push_back(dp);
    }
    return dm;
}

double step(const DiscreteModel& dm, double current, double v_next) {
    const auto& dp = dm.partitions[static_cast<std::size_t>(partition_of(dm.spec, v_next))];
    // Algebraically identical to gain * I - gain * D * (A V + C); this form
    // keeps the fixed point I* = A V + C exact in floating point.
    return current + dp.gain * dp.d * (current - (dp.voltage_gain * v_next + dp.intercept));
}

Trace simulate(const DiscreteModel& dm, const Trace& voltage, double initial_current,
               bool allow_resample) {
    voltage.validate();
    Trace input = voltage;
    if (std::abs(voltage.dt - dm.dt) > 1e-9) {
        const double ratio = dm.dt / voltage.dt;
        const auto stride = static_cast<std::size_t>(std::llround(ratio));
        const bool divides = stride >= 1 && std::abs(ratio - static_cast<double>(stride)) < 1e-6;
        if (!allow_resample || !divides) {
            throw ConfigError("trace dt " + std::to_string(voltage.dt) +
                              " does not match model dt " + std::to_string(dm.dt));
        }
        Trace sub;
        sub.dt = dm.dt;
        sub.meta = voltage.meta;
        for (std::size_t k = 0; k < voltage.size(); k += stride) {
            sub.t.push_back(voltage.t[k]);
            sub.v.push_back(voltage.v[k]);
            if (voltage.has_current()) sub.i.push_back(voltage.i[k]);
        }
        input = std::move(sub);
    }

    Trace out;
    out.dt = dm.dt;
    out.t = input.t;
    out.v = input.v;
    out.meta = input.meta;
    out.meta.source = "prediction";
    out.i.resize(input.size());
    double current = initial_current;
    out.i[0] = current;
    for (std::size_t k = 0; k + 1 < input.size(); ++k) {
        current = step(dm, current, input.v[k + 1]);
        out.i[k + 1] = current;
    }
    return out;
}

Trace rk4_oracle(const PartitionedODEModel& model, const Trace& voltage, double initial_current,
                 int substeps) {
    model.validate();
    voltage.validate();
    if (model.order != 1) throw ConfigError("RK4 oracle applies to order-1 models");
    if (substeps < 1) throw ConfigError("substeps must be >= 1");
    for (std::size_t p = 0; p < model.partitions.size(); ++p) {
        if (model.partitions[p].derivative_gains[0] == 0.0) {
            throw NumericError("partition " + std::to_string(p) + " has B = 0 (no dynamics)");
        }
    }

    const auto rate = [&](double i_state, double v_state) {
        const auto& rec = model.partitions[static_cast<std::size_t>(partition_of(model.spec, v_state))];
        return (i_state - rec.voltage_gain * v_state - rec.intercept) / rec.derivative_gains[0];
    };

    Trace out;
    out.dt = voltage.dt;
    out.t = voltage.t;
    out.v = voltage.v;
    out.meta = voltage.meta;
    out.meta.source = "rk4-oracle";
    out.i.resize(voltage.size());
    double current = initial_current;
    out.i[0] = current;
    const double h = voltage.dt / substeps;
    for (std::size_t k = 0; k + 1 < voltage.size(); ++k) {
        const double v0 = voltage.v[k];
        const double v1 = voltage.v[k + 1];
        for (int s = 0; s < substeps; ++s) {
            const double a0 = static_cast<double>(s) / substeps;
            const double a1 = (static_cast<double>(s) + 0.5) / substeps;
            const double a2 = static_cast<double>(s + 1) / substeps;
            const double va = v0 + (v1 - v0) * a0;
            const double vm = v0 + (v1 - v0) * a1;
            const double vb = v0 + (v1 - v0) * a2;
            const double k1 = rate(current, va);
            const double k2 = rate(current + 0.5 * h * k1, vm);
            const double k3 = rate(current + 0.5 * h * k2, vm);
            const double k4 = rate(current + h * k3, vb);
            current += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        out.i[k + 1] = current;
    }
    return out;
}

}  // namespace splinedyn
