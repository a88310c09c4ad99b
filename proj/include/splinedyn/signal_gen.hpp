#pragma once

#include <vector>

#include "splinedyn/trace.hpp"

namespace splinedyn {

/// Logarithmic square chirp: a cosine whose instantaneous frequency sweeps
/// exponentially from f0 to f1 over each window of length sweep_time, hard
/// limited to two amplitude levels. Windows repeat back to back, with both
/// frequencies scaled by (1 + sweep_growth) per repeat.
struct ChirpConfig {
    double amplitude_lo = 0.8884;
    double amplitude_hi = 1.0884;
    double f0 = 1.0;            ///< Hz at sweep start
    double f1 = 5.0;            ///< Hz at sweep end
    double sweep_time = 5.0;    ///< seconds per sweep window
    double total_duration = 100.0;
    double phase0 = 0.0;        ///< radians
    double sample_dt = 1e-3;
    double sweep_growth = 0.01; ///< fractional frequency increase per window

    void validate() const;
};

/// Square step: piecewise-constant voltage cycling through the level list.
struct StepConfig {
    std::vector<double> levels{0.90, 0.99};
    double dwell = 5.0;
    double total_duration = 50.0;
    double sample_dt = 1e-3;

    void validate() const;
};

Trace gen_log_square_chirp(const ChirpConfig& cfg);
Trace gen_square_step(const StepConfig& cfg);

}  // namespace splinedyn
