#include "splinedyn/plant.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "splinedyn/errors.hpp"

namespace splinedyn {

void VoltVarCurve::validate() const {
    if (!(v_l < v1 && v1 < v2 && v2 < v3 && v3 < v4 && v4 < v_h)) {
        throw ConfigError("Volt-Var breakpoints must satisfy V_L < V1 < V2 < V3 < V4 < V_H");
    }
    if (q2 != 0.0 || q3 != 0.0) throw ConfigError("Volt-Var deadband requires Q2 = Q3 = 0");
    if (!(q1 > 0.0) || !(q4 < 0.0)) throw ConfigError("Volt-Var requires Q1 > 0 > Q4");
}

void PlantConfig::validate() const {
    curve.validate();
    if (!(tau > 0.0)) throw ConfigError("plant tau must be positive");
    if (noise_sigma < 0.0) throw ConfigError("plant noise_sigma must be non-negative");
    if (n_houses < 1) throw ConfigError("plant n_houses must be positive");
    if (v_meas_tau < 0.0) throw ConfigError("plant v_meas_tau must be non-negative");
}

double voltvar_target(const VoltVarCurve& curve, double v) {
    if (v <= curve.v1) return curve.q1;
    if (v < curve.v2) return curve.q1 * (curve.v2 - v) / (curve.v2 - curve.v1);
    if (v <= curve.v3) return 0.0;
    if (v < curve.v4) return curve.q4 * (v - curve.v3) / (curve.v4 - curve.v3);
    return curve.q4;
}

namespace {

/// Deterministic Gaussian draws: Box-Muller over mt19937_64, independent of
/// the standard library's unspecified normal_distribution algorithm.
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : rng_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform01();  // (0, 1]
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    double uniform01() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace

Trace simulate_plant(const PlantConfig& cfg, const Trace& voltage) {
    cfg.validate();
    voltage.validate();

    const double dt = voltage.dt;
    const std::size_t n = voltage.size();
    const double gain = static_cast<double>(cfg.n_houses);

    Trace out;
    out.dt = dt;
    out.meta = voltage.meta;
    out.meta.seed = cfg.seed;
    out.t = voltage.t;
    out.v.resize(n);
    out.i.resize(n);

    if (dt > cfg.tau / 2.0) {
        out.meta.notes.push_back("warning: sample step exceeds tau/2; integration may be coarse");
    }
    if (cfg.v_meas_tau > 0.0 && dt > cfg.v_meas_tau / 2.0) {
        out.meta.notes.push_back("warning: sample step exceeds v_meas_tau/2");
    }

    const bool lagged_v = cfg.v_meas_tau > 0.0;
    double vm = voltage.v[0];
    double current = cfg.initial_current;

    // Input voltage is held constant over each step; the measurement filter
    // and the current lag are advanced jointly with classical RK4.
    auto di = [&](double i_state, double v_state) {
        return (gain * voltvar_target(cfg.curve, v_state) - i_state) / cfg.tau;
    };
    auto dv = [&](double v_state, double v_in) {
        return lagged_v ? (v_in - v_state) / cfg.v_meas_tau : 0.0;
    };

    GaussianSampler noise(cfg.seed);
    for (std::size_t k = 0; k < n; ++k) {
        out.v[k] = lagged_v ? vm : voltage.v[k];
        out.i[k] = current + (cfg.noise_sigma > 0.0 ? cfg.noise_sigma * noise.next() : 0.0);
        if (k + 1 == n) break;

        const double v_in = voltage.v[k];
        const double k1i = di(current, vm);
        const double k1v = dv(vm, v_in);
        const double k2i = di(current + 0.5 * dt * k1i, vm + 0.5 * dt * k1v);
        const double k2v = dv(vm + 0.5 * dt * k1v, v_in);
        const double k3i = di(current + 0.5 * dt * k2i, vm + 0.5 * dt * k2v);
        const double k3v = dv(vm + 0.5 * dt * k2v, v_in);
        const double k4i = di(current + dt * k3i, vm + dt * k3v);
        const double k4v = dv(vm + dt * k3v, v_in);
        current += dt / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i);
        if (lagged_v) vm += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        else vm = voltage.v[k + 1];
    }
    return out;
}

}  // namespace splinedyn
