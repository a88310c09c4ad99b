#include "splinedyn/signal_gen.hpp"

#include <cmath>
#include <numbers>

#include "splinedyn/errors.hpp"

namespace splinedyn {

void ChirpConfig::validate() const {
    if (!(f0 > 0.0)) throw ConfigError("chirp f0 must be positive");
    if (f1 < f0) throw ConfigError("chirp requires f0 <= f1");
    if (!(sweep_time > 0.0)) throw ConfigError("chirp sweep_time must be positive");
    if (!(amplitude_lo < amplitude_hi)) throw ConfigError("chirp amplitude_lo must be < amplitude_hi");
    if (!(sample_dt > 0.0)) throw ConfigError("chirp sample_dt must be positive");
    if (!(total_duration > 0.0)) throw ConfigError("chirp total_duration must be positive");
    if (sweep_growth < 0.0) throw ConfigError("chirp sweep_growth must be non-negative");
}

void StepConfig::validate() const {
    if (levels.empty()) throw ConfigError("step requires at least one level");
    for (double level : levels) {
        if (level < 0.85 || level > 1.15) {
            throw ConfigError("step level " + std::to_string(level) + " outside [0.85, 1.15] p.u.");
        }
    }
    if (!(dwell > 0.0)) throw ConfigError("step dwell must be positive");
    if (!(sample_dt > 0.0)) throw ConfigError("step sample_dt must be positive");
    if (!(total_duration > 0.0)) throw ConfigError("step total_duration must be positive");
}

namespace {

/// Phase accumulated by an exponential sweep from f0 to f1 over window T at
/// local time tau: 2*pi*f0*(T/ln(r))*(r^(tau/T) - 1) with r = f1/f0.
double sweep_phase(double tau, double f0, double f1, double T) {
    const double r = f1 / f0;
    if (std::abs(r - 1.0) < 1e-12) return 2.0 * std::numbers::pi * f0 * tau;
    const double lnr = std::log(r);
    return 2.0 * std::numbers::pi * f0 * (T / lnr) * (std::exp(lnr * tau / T) - 1.0);
}

}  // namespace

Trace gen_log_square_chirp(const ChirpConfig& cfg) {
    cfg.validate();
    const auto n = static_cast<std::size_t>(std::llround(cfg.total_duration / cfg.sample_dt));
    Trace trace;
    trace.dt = cfg.sample_dt;
    trace.meta.source = "chirp";
    trace.t.resize(n);
    trace.v.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * cfg.sample_dt;
        const auto window = static_cast<long>(std::floor(t / cfg.sweep_time));
        const double tau = t - static_cast<double>(window) * cfg.sweep_time;
        const double scale = std::pow(1.0 + cfg.sweep_growth, static_cast<double>(window));
        const double phase = sweep_phase(tau, cfg.f0 * scale, cfg.f1 * scale, cfg.sweep_time) + cfg.phase0;
        trace.t[k] = t;
        trace.v[k] = std::cos(phase) >= 0.0 ? cfg.amplitude_hi : cfg.amplitude_lo;
    }
    return trace;
}

Trace gen_square_step(const StepConfig& cfg) {
    cfg.validate();
    const auto n = static_cast<std::size_t>(std::llround(cfg.total_duration / cfg.sample_dt));
    const auto per_dwell = static_cast<std::size_t>(std::llround(cfg.dwell / cfg.sample_dt));
    if (per_dwell == 0) throw ConfigError("step dwell shorter than one sample");
    Trace trace;
    trace.dt = cfg.sample_dt;
    trace.meta.source = "step";
    trace.t.resize(n);
    trace.v.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        trace.t[k] = static_cast<double>(k) * cfg.sample_dt;
        trace.v[k] = cfg.levels[(k / per_dwell) % cfg.levels.size()];
    }
    return trace;
}

}  // namespace splinedyn
