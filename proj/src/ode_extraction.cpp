#include "splinedyn/ode_extraction.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "splinedyn/errors.hpp"

namespace splinedyn {

PartitionSpec PartitionSpec::uniform(double lo, double hi, int k) {
    if (!(lo < hi)) throw ConfigError("partition range must have lo < hi");
    if (k < 1) throw ConfigError("partition count must be positive");
    PartitionSpec spec;
    spec.edges.resize(static_cast<std::size_t>(k) + 1);
    for (int j = 0; j <= k; ++j) spec.edges[static_cast<std::size_t>(j)] = lo + (hi - lo) * j / k;
    spec.edges.back() = hi;
    return spec;
}

void PartitionSpec::validate() const {
    if (edges.size() < 2) throw ConfigError("partition spec needs at least two edges");
    for (std::size_t j = 1; j < edges.size(); ++j) {
        if (!(edges[j] > edges[j - 1])) throw ConfigError("partition edges must be strictly increasing");
    }
}

void PartitionedODEModel::validate() const {
    spec.validate();
    if (order < 1 || order > 4) throw ConfigError("ODE order must be in 1..4");
    if (static_cast<int>(partitions.size()) != spec.count()) {
        throw ConfigError("partition record count disagrees with the spec");
    }
    for (const auto& p : partitions) {
        if (static_cast<int>(p.derivative_gains.size()) != order) {
            throw ConfigError("partition record has wrong number of derivative gains");
        }
    }
}

Eigen::MatrixXd compute_derivatives(const SmoothFit& fit, std::span<const double> t, int max_order) {
    if (max_order < 1 || max_order > 4) throw ConfigError("derivative order must be in 1..4");
    if (max_order > fit.basis.degree()) {
        throw NumericError("requested derivative order " + std::to_string(max_order) +
                           " exceeds the spline degree " + std::to_string(fit.basis.degree()) +
                           "; refit with a spline of order at least " + std::to_string(max_order + 1));
    }
    Eigen::MatrixXd cols(static_cast<Eigen::Index>(t.size()), max_order);
    for (int k = 1; k <= max_order; ++k) cols.col(k - 1) = evaluate(fit, t, k);
    return cols;
}

int partition_of(const PartitionSpec& spec, double v) {
    const auto it = std::upper_bound(spec.edges.begin(), spec.edges.end(), v);
    const int p = static_cast<int>(it - spec.edges.begin()) - 1;
    return std::clamp(p, 0, spec.count() - 1);  // ends clamped, last edge inclusive
}

std::vector<int> assign_partitions(const PartitionSpec& spec, std::span<const double> v) {
    spec.validate();
    std::vector<int> idx(v.size());
    for (std::size_t s = 0; s < v.size(); ++s) idx[s] = partition_of(spec, v[s]);
    return idx;
}

PartitionCoefficients fit_partition_ode(const Eigen::VectorXd& current, const Eigen::VectorXd& voltage,
                                        const Eigen::MatrixXd& derivatives, int order) {
    if (order < 1 || order > 4) throw ConfigError("ODE order must be in 1..4");
    const Eigen::Index n = current.size();
    if (voltage.size() != n || derivatives.rows() != n) {
        throw ConfigError("partition regression inputs have mismatched lengths");
    }
    if (derivatives.cols() < order) throw ConfigError("not enough derivative columns for the order");
    if (n < order + 2) throw ConfigError("too few samples in partition for the requested order");

    // Columns are centered and scaled to unit norm before the rank-revealing
    // QR; the coefficients are mapped back afterwards, which is exact.
    const int ncols = 1 + order;
    Eigen::MatrixXd X(n, ncols);
    X.col(0) = voltage;
    for (int k = 0; k < order; ++k) X.col(k + 1) = derivatives.col(k);

    const Eigen::VectorXd col_mean = X.colwise().mean();
    const double y_mean = current.mean();
    Eigen::MatrixXd Xc = X.rowwise() - col_mean.transpose();
    Eigen::VectorXd yc = current.array() - y_mean;

    Eigen::VectorXd scale(ncols);
    for (int c = 0; c < ncols; ++c) {
        const double nrm = Xc.col(c).norm();
        scale(c) = nrm > 0.0 ? nrm : 1.0;
        Xc.col(c) /= scale(c);
    }

    auto solve_scaled = [&](const Eigen::MatrixXd& A, bool& deficient) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
        deficient = qr.rank() < A.cols();
        return Eigen::VectorXd(qr.solve(yc));
    };

    PartitionCoefficients out;
    out.sample_count = static_cast<int>(n);
    out.derivative_gains.assign(static_cast<std::size_t>(order), 0.0);

    bool deficient = false;
    Eigen::VectorXd beta = solve_scaled(Xc, deficient);
    const bool v_constant = X.col(0).maxCoeff() - X.col(0).minCoeff() == 0.0;
    if (deficient || v_constant) {
        out.voltage_dropped = true;
        bool still_deficient = false;
        const Eigen::VectorXd beta_nd = solve_scaled(Xc.rightCols(order), still_deficient);
        beta.setZero(ncols);
        beta.tail(order) = beta_nd;  // finite basic solution even if still deficient
    }

    Eigen::VectorXd coef = beta.array() / scale.array();
    out.voltage_gain = coef(0);
    for (int k = 0; k < order; ++k) out.derivative_gains[static_cast<std::size_t>(k)] = coef(k + 1);
    out.intercept = y_mean - coef.dot(col_mean);
    out.stable = out.derivative_gains[0] < 0.0;

    Eigen::VectorXd resid = current - X * coef;
    resid.array() -= out.intercept;
    out.rss = resid.squaredNorm();
    return out;
}

std::vector<double> default_lambda_grid() {
    std::vector<double> grid;
    for (int e = -8; e <= 2; ++e) grid.push_back(std::pow(10.0, e));
    return grid;
}

ExtractionResult extract_model(const Trace& trace, const ExtractionSettings& settings,
                               const PartitionSpec& spec, int order) {
    trace.validate();
    spec.validate();
    if (!trace.has_current()) throw ConfigError("extraction requires a trace with a current column");
    if (order < 1 || order > 4) throw ConfigError("ODE order must be in 1..4");
    if (settings.degree < order + 1) {
        throw ConfigError("spline degree must be at least order + 1 = " + std::to_string(order + 1));
    }

    const double t0 = trace.t.front();
    const double t1 = trace.t.back();
    int grid_size = settings.grid_size;
    if (grid_size <= 0) {
        grid_size = std::max(2, static_cast<int>(std::ceil((t1 - t0) / settings.knot_spacing)));
    }
    const BSplineBasis basis = make_uniform_basis(t0, t1, grid_size, settings.degree);

    ExtractionResult result;
    if (settings.use_ocv) {
        const std::vector<double> grid =
            settings.lambda_grid.empty() ? default_lambda_grid() : settings.lambda_grid;
        const OcvResult ocv = select_lambda_ocv(basis, trace.t, trace.i, settings.penalty_order, grid);
        result.lambda_used = ocv.best_lambda;
    } else {
        result.lambda_used = settings.lambda;
    }
    result.smooth = fit_penalized(basis, trace.t, trace.i, result.lambda_used,
                                  settings.penalty_order, DomainKind::time);

    const Eigen::VectorXd smoothed = evaluate(result.smooth, trace.t, 0);
    const Eigen::MatrixXd derivs = compute_derivatives(result.smooth, trace.t, order);
    result.partition_index = assign_partitions(spec, trace.v);

    const int k = spec.count();
    std::vector<std::vector<Eigen::Index>> rows(static_cast<std::size_t>(k));
    for (std::size_t s = 0; s < result.partition_index.size(); ++s) {
        rows[static_cast<std::size_t>(result.partition_index[s])].push_back(
            static_cast<Eigen::Index>(s));
    }

    PartitionedODEModel model;
    model.spec = spec;
    model.order = order;
    model.dt = trace.dt;
    model.partitions.resize(static_cast<std::size_t>(k));

    auto fit_one = [&](int p) {
        const auto& r = rows[static_cast<std::size_t>(p)];
        auto& rec = model.partitions[static_cast<std::size_t>(p)];
        if (static_cast<int>(r.size()) < order + 2) {
            rec.degenerate = true;
            rec.sample_count = static_cast<int>(r.size());
            rec.derivative_gains.assign(static_cast<std::size_t>(order), 0.0);
            return;
        }
        Eigen::VectorXd cur(r.size()), vol(r.size());
        Eigen::MatrixXd der(r.size(), order);
        for (std::size_t j = 0; j < r.size(); ++j) {
            cur(static_cast<Eigen::Index>(j)) = smoothed(r[j]);
            vol(static_cast<Eigen::Index>(j)) = trace.v[static_cast<std::size_t>(r[j])];
            der.row(static_cast<Eigen::Index>(j)) = derivs.row(r[j]);
        }
        rec = fit_partition_ode(cur, vol, der, order);
    };

    if (settings.parallel && k > 1) {
        std::vector<std::future<void>> tasks;
        tasks.reserve(static_cast<std::size_t>(k));
        for (int p = 0; p < k; ++p) tasks.push_back(std::async(std::launch::async, fit_one, p));
        for (auto& task : tasks) task.get();
    } else {
        for (int p = 0; p < k; ++p) fit_one(p);
    }

    // Under-sampled partitions inherit the nearest populated record (ties to
    // the left).
    std::vector<int> populated;
    for (int p = 0; p < k; ++p) {
        if (!model.partitions[static_cast<std::size_t>(p)].degenerate) populated.push_back(p);
    }
    if (populated.empty()) throw NumericError("no partition has enough samples to fit");
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

    result.insample_prediction = regression_predict(model, trace.v, derivs);
    result.model = std::move(model);
    return result;
}

Eigen::VectorXd regression_predict(const PartitionedODEModel& model, std::span<const double> v,
                                   const Eigen::MatrixXd& derivatives) {
    model.validate();
    if (derivatives.rows() != static_cast<Eigen::Index>(v.size()) || derivatives.cols() < model.order) {
        throw ConfigError("derivative matrix shape mismatch in regression_predict");
    }
    const std::vector<int> idx = assign_partitions(model.spec, v);
    Eigen::VectorXd pred(static_cast<Eigen::Index>(v.size()));
    for (std::size_t s = 0; s < v.size(); ++s) {
        const auto& rec = model.partitions[static_cast<std::size_t>(idx[s])];
        double acc = rec.voltage_gain * v[s] + rec.intercept;
        for (int k = 0; k < model.order; ++k) {
            acc += rec.derivative_gains[static_cast<std::size_t>(k)] *
                   derivatives(static_cast<Eigen::Index>(s), k);
        }
        pred(static_cast<Eigen::Index>(s)) = acc;
    }
    return pred;
}

}  // namespace splinedyn
