#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace splinedyn {

struct TraceMeta {
    std::string source;
    std::uint64_t seed = 0;
    double trim_applied = 0.0;
    std::vector<std::string> notes;
};

/// Uniformly sampled time series of voltage (p.u.) and, optionally, aggregate
/// reactive current (p.u.). Sampling jitter beyond 1e-9 s and non-finite
/// values are rejected on construction/load.
struct Trace {
    std::vector<double> t;
    std::vector<double> v;
    std::vector<double> i;  // empty for excitation-only traces
    double dt = 0.0;
    TraceMeta meta;

    [[nodiscard]] std::size_t size() const noexcept { return t.size(); }
    [[nodiscard]] bool has_current() const noexcept { return !i.empty(); }

    /// Checks uniform sampling, matching column lengths and finiteness.
    void validate() const;
};

/// Drop the first ceil(seconds / dt) samples (startup transient removal).
Trace trim_trace(const Trace& trace, double seconds);

/// CSV with `# key=value` metadata lines, header `t,v,i` (`t,v` when there is
/// no current column) and 9-significant-digit values.
void save_trace_csv(const Trace& trace, const std::filesystem::path& path);
Trace load_trace_csv(const std::filesystem::path& path);

}  // namespace splinedyn
