#include "splinedyn/trace.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "splinedyn/errors.hpp"

namespace splinedyn {

namespace {

std::string fmt9(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", value);
    return buf;
}

void require_finite(const std::vector<double>& col, const char* name) {
    for (double x : col) {
        if (!std::isfinite(x)) throw NumericError(std::string("non-finite value in column ") + name);
    }
}

}  // namespace

void Trace::validate() const {
    if (t.size() < 2) throw ConfigError("trace needs at least two samples");
    if (v.size() != t.size()) throw ConfigError("voltage column length mismatch");
    if (!i.empty() && i.size() != t.size()) throw ConfigError("current column length mismatch");
    require_finite(t, "t");
    require_finite(v, "v");
    require_finite(i, "i");
    const double step = t[1] - t[0];
    if (!(step > 0.0)) throw ConfigError("time column must be strictly increasing");
    for (std::size_t k = 1; k < t.size(); ++k) {
        if (std::abs((t[k] - t[k - 1]) - step) > 1e-9) {
            throw ConfigError("non-uniform sampling at row " + std::to_string(k));
        }
    }
    if (dt != 0.0 && std::abs(dt - step) > 1e-9) throw ConfigError("dt field disagrees with time column");
}

Trace trim_trace(const Trace& trace, double seconds) {
    if (seconds < 0.0) throw ConfigError("trim must be non-negative");
    Trace out = trace;
    if (seconds == 0.0) return out;
    const std::size_t drop =
        static_cast<std::size_t>(std::ceil(seconds / trace.dt - 1e-9));
    if (drop >= trace.size()) throw ConfigError("trim would remove the whole trace");
    out.t.assign(trace.t.begin() + static_cast<std::ptrdiff_t>(drop), trace.t.end());
    out.v.assign(trace.v.begin() + static_cast<std::ptrdiff_t>(drop), trace.v.end());
    if (trace.has_current()) {
        out.i.assign(trace.i.begin() + static_cast<std::ptrdiff_t>(drop), trace.i.end());
    }
    out.meta.trim_applied = trace.meta.trim_applied + seconds;
    return out;
}

void save_trace_csv(const Trace& trace, const std::filesystem::path& path) {
    trace.validate();
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f << "# source=" << trace.meta.source << "\n";
    f << "# seed=" << trace.meta.seed << "\n";
    f << "# trim=" << fmt9(trace.meta.trim_applied) << "\n";
    for (const auto& note : trace.meta.notes) f << "# note=" << note << "\n";
    if (trace.has_current()) {
        f << "t,v,i\n";
        for (std::size_t k = 0; k < trace.size(); ++k) {
            f << fmt9(trace.t[k]) << ',' << fmt9(trace.v[k]) << ',' << fmt9(trace.i[k]) << '\n';
        }
    } else {
        f << "t,v\n";
        for (std::size_t k = 0; k < trace.size(); ++k) {
            f << fmt9(trace.t[k]) << ',' << fmt9(trace.v[k]) << '\n';
        }
    }
    if (!f) throw IoError("write failed: " + path.string());
}

Trace load_trace_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path.string());
    Trace trace;
    std::string line;
    bool header_seen = false;
    bool with_current = false;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string key = line.substr(1, eq - 1);
            std::string val = line.substr(eq + 1);
            key.erase(0, key.find_first_not_of(' '));
            key.erase(key.find_last_not_of(' ') + 1);
            if (key == "source") trace.meta.source = val;
            else if (key == "seed") trace.meta.seed = std::stoull(val);
            else if (key == "trim") trace.meta.trim_applied = std::stod(val);
            else if (key == "note") trace.meta.notes.push_back(val);
            continue;
        }
        if (!header_seen) {
            if (line == "t,v,i") with_current = true;
            else if (line == "t,v") with_current = false;
            else throw IoError(path.string() + ": unexpected header '" + line + "'");
            header_seen = true;
            continue;
        }
        std::istringstream row(line);
        std::string cell;
        double vals[3] = {0, 0, 0};
        const int want = with_current ? 3 : 2;
        for (int c = 0; c < want; ++c) {
            if (!std::getline(row, cell, ',')) {
                throw IoError(path.string() + ": short row at line " + std::to_string(lineno));
            }
            try {
                vals[c] = std::stod(cell);
            } catch (const std::exception&) {
                throw IoError(path.string() + ": bad number '" + cell + "' at line " +
                              std::to_string(lineno));
            }
        }
        trace.t.push_back(vals[0]);
        trace.v.push_back(vals[1]);
        if (with_current) trace.i.push_back(vals[2]);
    }
    if (!header_seen) throw IoError(path.string() + ": missing header");
    if (trace.t.size() < 2) throw IoError(path.string() + ": fewer than two samples");
    trace.dt = trace.t[1] - trace.t[0];
    trace.validate();
    return trace;
}

}  // namespace splinedyn
