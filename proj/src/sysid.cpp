#include "splinedyn/sysid.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "splinedyn/errors.hpp"
#include "splinedyn/metrics.hpp"

namespace splinedyn {

namespace {

bool poles_inside_unit_circle(const std::vector<double>& a) {
    const int n = static_cast<int>(a.size());
    if (n == 0) return true;
    if (n == 1) return std::abs(a[0]) < 1.0;
    // Companion matrix of z^n + a1 z^{n-1} + ... + an.
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j) comp(0, j) = -a[static_cast<std::size_t>(j)];
    for (int r = 1; r < n; ++r) comp(r, r - 1) = 1.0;
    const Eigen::VectorXcd ev = comp.eigenvalues();
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
        if (std::abs(ev(k)) >= 1.0) return false;
    }
    return true;
}

}  // namespace

ARXModel fit_arx(std::span<const double> current, std::span<const double> voltage,
                 std::span<const int> partition_index, const PartitionSpec& spec, int n, int m,
                 double dt) {
    spec.validate();
    if (n < 1) throw ConfigError("ARX pole count n must be >= 1");
    if (m < 0) throw ConfigError("ARX zero count m must be >= 0");
    if (current.size() != voltage.size() || current.size() != partition_index.size()) {
        throw ConfigError("ARX inputs have mismatched lengths");
    }
    const int lag = std::max(n, m);
    const int ncols = n + m + 1;
    if (static_cast<int>(current.size()) <= lag + ncols) {
        throw ConfigError("too few samples for ARX(" + std::to_string(n) + "," + std::to_string(m) + ")");
    }

    const int k = spec.count();
    std::vector<std::vector<std::size_t>> rows(static_cast<std::size_t>(k));
    for (std::size_t s = static_cast<std::size_t>(lag); s < current.size(); ++s) {
        rows[static_cast<std::size_t>(partition_index[s])].push_back(s);
    }

    ARXModel model;
    model.spec = spec;
    model.n = n;
    model.m = m;
    model.dt = dt;
    model.partitions.resize(static_cast<std::size_t>(k));
    model.train_i_min = *std::min_element(current.begin(), current.end());
    model.train_i_max = *std::max_element(current.begin(), current.end());

    for (int p = 0; p < k; ++p) {
        auto& rec = model.partitions[static_cast<std::size_t>(p)];
        const auto& r = rows[static_cast<std::size_t>(p)];
        rec.sample_count = static_cast<int>(r.size());
        if (static_cast<int>(r.size()) < ncols + 1) {
            rec.degenerate = true;
            continue;
        }
        Eigen::MatrixXd X(static_cast<Eigen::Index>(r.size()), ncols);
        Eigen::VectorXd y(static_cast<Eigen::Index>(r.size()));
        for (std::size_t j = 0; j < r.size(); ++j) {
            const std::size_t s = r[j];
            const auto row = static_cast<Eigen::Index>(j);
            y(row) = current[s];
            for (int q = 1; q <= n; ++q) X(row, q - 1) = -current[s - static_cast<std::size_t>(q)];
            for (int q = 0; q <= m; ++q) X(row, n + q) = voltage[s - static_cast<std::size_t>(q)];
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
        rec.rank_deficient = qr.rank() < ncols;
        const Eigen::VectorXd beta = qr.solve(y);
        rec.a.assign(beta.data(), beta.data() + n);
        rec.b.assign(beta.data() + n, beta.data() + ncols);
        rec.stable = poles_inside_unit_circle(rec.a);
    }

    std::vector<int> populated;
    for (int p = 0; p < k; ++p) {
        if (!model.partitions[static_cast<std::size_t>(p)].degenerate) populated.push_back(p);
    }
    if (populated.empty()) throw NumericError("no partition has enough samples for the ARX fit");
    for (int p = 0; p < k; ++p) {
        auto& rec = model.partitions[static_cast<std::size_t>(p)];
        if (!rec.degenerate) continue;
        int best = populated.front();
        for (int q : populated) {
            if (std::abs(q - p) < std::abs(best - p)) best = q;
        }
        const int own_count = rec.sample_count;
        rec = model.partitions[static_cast<std::size_t>(best)];
        rec.degenerate = true;
        rec.inherited_from = best;
        rec.sample_count = own_count;
    }
    return model;
}

ArxSimResult simulate_arx(const ARXModel& model, const Trace& voltage, std::span<const double> init) {
    voltage.validate();
    if (static_cast<int>(init.size()) < model.n) {
        throw ConfigError("ARX simulation needs n = " + std::to_string(model.n) + " initial outputs");
    }
    const std::size_t nsamp = voltage.size();
    ArxSimResult result;
    result.trace.dt = voltage.dt;
    result.trace.t = voltage.t;
    result.trace.v = voltage.v;
    result.trace.meta = voltage.meta;
    result.trace.meta.source = "arx-prediction";
    result.trace.i.resize(nsamp);

    const double span = model.train_i_max - model.train_i_min;
    const double flag_lo = model.train_i_min - 10.0 * std::max(span, 1e-12);
    const double flag_hi = model.train_i_max + 10.0 * std::max(span, 1e-12);

    auto past_output = [&](std::size_t k, int back) -> double {
        const auto idx = static_cast<std::ptrdiff_t>(k) - back;
        if (idx >= 0) return result.trace.i[static_cast<std::size_t>(idx)];
        return init[init.size() - static_cast<std::size_t>(-idx)];
    };
    auto past_input = [&](std::size_t k, int back) -> double {
        const auto idx = static_cast<std::ptrdiff_t>(k) - back;
        return voltage.v[static_cast<std::size_t>(std::max<std::ptrdiff_t>(idx, 0))];
    };

    for (std::size_t k = 0; k < nsamp; ++k) {
        const auto& rec = model.partitions[static_cast<std::size_t>(partition_of(model.spec, voltage.v[k]))];
        double acc = 0.0;
        for (int q = 1; q <= model.n; ++q) acc -= rec.a[static_cast<std::size_t>(q - 1)] * past_output(k, q);
        for (int q = 0; q <= model.m; ++q) acc += rec.b[static_cast<std::size_t>(q)] * past_input(k, q);
        result.trace.i[k] = acc;
        if (acc < flag_lo || acc > flag_hi) result.range_exceeded = true;
    }
    if (result.range_exceeded) {
        result.trace.meta.notes.push_back("warning: prediction left 10x the training range");
    }
    return result;
}

Trace predict_arx_one_step(const ARXModel& model, const Trace& measured) {
    measured.validate();
    if (!measured.has_current()) throw ConfigError("one-step ARX prediction needs measured current");
    Trace out;
    out.dt = measured.dt;
    out.t = measured.t;
    out.v = measured.v;
    out.meta = measured.meta;
    out.meta.source = "arx-one-step";
    out.i.resize(measured.size());
    const auto lag = static_cast<std::size_t>(std::max(model.n, model.m));
    for (std::size_t k = 0; k < measured.size(); ++k) {
        if (k < lag) {
            out.i[k] = measured.i[k];
            continue;
        }
        const auto& rec = model.partitions[static_cast<std::size_t>(partition_of(model.spec, measured.v[k]))];
        double acc = 0.0;
        for (int q = 1; q <= model.n; ++q) {
            acc -= rec.a[static_cast<std::size_t>(q - 1)] * measured.i[k - static_cast<std::size_t>(q)];
        }
        for (int q = 0; q <= model.m; ++q) {
            acc += rec.b[static_cast<std::size_t>(q)] * measured.v[k - static_cast<std::size_t>(q)];
        }
        out.i[k] = acc;
    }
    return out;
}

std::vector<BenchmarkRow> benchmark_orders(const Trace& training, const ExtractionSettings& spline_settings,
                                           const PartitionSpec& spec, std::span<const int> orders,
                                           int arx_zero_count, int repeats) {
    if (repeats < 1) throw ConfigError("benchmark repeats must be >= 1");
    std::vector<BenchmarkRow> table;
    if (orders.empty()) return table;

    int max_order = 1;
    for (int order : orders) max_order = std::max(max_order, order);
    ExtractionSettings settings = spline_settings;
    settings.degree = std::max(settings.degree, max_order + 1);

    const std::vector<int> pidx = assign_partitions(spec, training.v);

    using clock = std::chrono::steady_clock;
    for (int order : orders) {
        BenchmarkRow spline_row;
        spline_row.method = "bspline-ode";
        spline_row.order = order;
        for (int rep = 0; rep < repeats; ++rep) {
            const auto start = clock::now();
            const ExtractionResult res = extract_model(training, settings, spec, order);
            const std::chrono::duration<double> dur = clock::now() - start;
            spline_row.run_seconds.push_back(dur.count());
            if (rep == 0) {
                spline_row.insample_gof = gof(training.i, std::span<const double>(
                    res.insample_prediction.data(), static_cast<std::size_t>(res.insample_prediction.size())));
            }
        }
        BenchmarkRow arx_row;
        arx_row.method = "arx";
        arx_row.order = order;
        for (int rep = 0; rep < repeats; ++rep) {
            const auto start = clock::now();
            const ARXModel model = fit_arx(training.i, training.v, pidx, spec, order, arx_zero_count,
                                           training.dt);
            const std::chrono::duration<double> dur = clock::now() - start;
            arx_row.run_seconds.push_back(dur.count());
            if (rep == 0) {
                const Trace pred = predict_arx_one_step(model, training);
                arx_row.insample_gof = gof(training.i, pred.i);
            }
        }
        for (BenchmarkRow* row : {&spline_row, &arx_row}) {
            std::vector<double> sorted = row->run_seconds;
            std::sort(sorted.begin(), sorted.end());
            row->median_seconds = sorted[sorted.size() / 2];
            if (sorted.size() % 2 == 0) {
                row->median_seconds = 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
            }
        }
        table.push_back(std::move(spline_row));
        table.push_back(std::move(arx_row));
    }
    return table;
}

}  // namespace splinedyn
