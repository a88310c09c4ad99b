#include "splinedyn/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "splinedyn/discrete_sim.hpp"
#include "splinedyn/errors.hpp"

namespace splinedyn {

namespace {

using nlohmann::json;

std::string fmt9(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", value);
    return buf;
}

double observed_min(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }
double observed_max(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

json curve_to_json(const VoltVarCurve& c) {
    return json{{"v_l", c.v_l}, {"v1", c.v1}, {"v2", c.v2}, {"v3", c.v3},
                {"v4", c.v4},   {"v_h", c.v_h}, {"q1", c.q1}, {"q2", c.q2},
                {"q3", c.q3},   {"q4", c.q4}};
}

void curve_from_json(const json& j, VoltVarCurve& c) {
    c.v_l = j.at("v_l").get<double>();
    c.v1 = j.at("v1").get<double>();
    c.v2 = j.at("v2").get<double>();
    c.v3 = j.at("v3").get<double>();
    c.v4 = j.at("v4").get<double>();
    c.v_h = j.at("v_h").get<double>();
    c.q1 = j.at("q1").get<double>();
    c.q2 = j.at("q2").get<double>();
    c.q3 = j.at("q3").get<double>();
    c.q4 = j.at("q4").get<double>();
}

}  // namespace

void PipelineConfig::validate() const {
    chirp.validate();
    step.validate();
    plant.validate();
    if (partitions < 1) throw ConfigError("partitions must be positive");
    if (ode_order < 1 || ode_order > 4) throw ConfigError("ode_order must be in 1..4");
    if (smoothing.degree < ode_order + 1) {
        throw ConfigError("smoothing degree must be at least ode_order + 1 = " +
                          std::to_string(ode_order + 1));
    }
    if (trim < 0.0) throw ConfigError("trim must be non-negative");
    if (smoothing.lambda < 0.0) throw ConfigError("smoothing lambda must be non-negative");
    if (smoothing.penalty_order < 1) throw ConfigError("penalty order must be positive");
    if (smoothing.knot_spacing <= 0.0 && smoothing.grid_size <= 0) {
        throw ConfigError("smoothing needs a positive knot_spacing or an explicit grid_size");
    }
}

std::string config_to_json(const PipelineConfig& cfg) {
    json j;
    j["chirp"] = {{"amplitude_lo", cfg.chirp.amplitude_lo}, {"amplitude_hi", cfg.chirp.amplitude_hi},
                  {"f0", cfg.chirp.f0},                     {"f1", cfg.chirp.f1},
                  {"sweep_time", cfg.chirp.sweep_time},     {"duration", cfg.chirp.total_duration},
                  {"phase0", cfg.chirp.phase0},             {"dt", cfg.chirp.sample_dt},
                  {"sweep_growth", cfg.chirp.sweep_growth}};
    j["step"] = {{"levels", cfg.step.levels},
                 {"dwell", cfg.step.dwell},
                 {"duration", cfg.step.total_duration},
                 {"dt", cfg.step.sample_dt}};
    j["plant"] = {{"tau", cfg.plant.tau},
                  {"noise_sigma", cfg.plant.noise_sigma},
                  {"n_houses", cfg.plant.n_houses},
                  {"v_meas_tau", cfg.plant.v_meas_tau},
                  {"initial_current", cfg.plant.initial_current},
                  {"curve", curve_to_json(cfg.plant.curve)}};
    j["smoothing"] = {{"degree", cfg.smoothing.degree},
                      {"knot_spacing", cfg.smoothing.knot_spacing},
                      {"grid_size", cfg.smoothing.grid_size},
                      {"lambda", cfg.smoothing.lambda},
                      {"penalty_order", cfg.smoothing.penalty_order},
                      {"use_ocv", cfg.smoothing.use_ocv},
                      {"lambda_grid", cfg.smoothing.lambda_grid},
                      {"parallel", cfg.smoothing.parallel}};
    j["partitions"] = cfg.partitions;
    j["ode_order"] = cfg.ode_order;
    j["trim"] = cfg.trim;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir;
    return j.dump(2) + "\n";
}

PipelineConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid config JSON: ") + e.what());
    }
    PipelineConfig cfg;
    try {
        if (j.contains("chirp")) {
            const json& c = j["chirp"];
            cfg.chirp.amplitude_lo = c.value("amplitude_lo", cfg.chirp.amplitude_lo);
            cfg.chirp.amplitude_hi = c.value("amplitude_hi", cfg.chirp.amplitude_hi);
            cfg.chirp.f0 = c.value("f0", cfg.chirp.f0);
            cfg.chirp.f1 = c.value("f1", cfg.chirp.f1);
            cfg.chirp.sweep_time = c.value("sweep_time", cfg.chirp.sweep_time);
            cfg.chirp.total_duration = c.value("duration", cfg.chirp.total_duration);
            cfg.chirp.phase0 = c.value("phase0", cfg.chirp.phase0);
            cfg.chirp.sample_dt = c.value("dt", cfg.chirp.sample_dt);
            cfg.chirp.sweep_growth = c.value("sweep_growth", cfg.chirp.sweep_growth);
        }
        if (j.contains("step")) {
            const json& s = j["step"];
            cfg.step.levels = s.value("levels", cfg.step.levels);
            cfg.step.dwell = s.value("dwell", cfg.step.dwell);
            cfg.step.total_duration = s.value("duration", cfg.step.total_duration);
            cfg.step.sample_dt = s.value("dt", cfg.step.sample_dt);
        }
        if (j.contains("plant")) {
            const json& p = j["plant"];
            cfg.plant.tau = p.value("tau", cfg.plant.tau);
            cfg.plant.noise_sigma = p.value("noise_sigma", cfg.plant.noise_sigma);
            cfg.plant.n_houses = p.value("n_houses", cfg.plant.n_houses);
            cfg.plant.v_meas_tau = p.value("v_meas_tau", cfg.plant.v_meas_tau);
            cfg.plant.initial_current = p.value("initial_current", cfg.plant.initial_current);
            if (p.contains("curve")) curve_from_json(p["curve"], cfg.plant.curve);
        }
        if (j.contains("smoothing")) {
            const json& s = j["smoothing"];
            cfg.smoothing.degree = s.value("degree", cfg.smoothing.degree);
            cfg.smoothing.knot_spacing = s.value("knot_spacing", cfg.smoothing.knot_spacing);
            cfg.smoothing.grid_size = s.value("grid_size", cfg.smoothing.grid_size);
            cfg.smoothing.lambda = s.value("lambda", cfg.smoothing.lambda);
            cfg.smoothing.penalty_order = s.value("penalty_order", cfg.smoothing.penalty_order);
            cfg.smoothing.use_ocv = s.value("use_ocv", cfg.smoothing.use_ocv);
            cfg.smoothing.lambda_grid = s.value("lambda_grid", cfg.smoothing.lambda_grid);
            cfg.smoothing.parallel = s.value("parallel", cfg.smoothing.parallel);
        }
        cfg.partitions = j.value("partitions", cfg.partitions);
        cfg.ode_order = j.value("ode_order", cfg.ode_order);
        cfg.trim = j.value("trim", cfg.trim);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.output_dir = j.value("output_dir", cfg.output_dir);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return cfg;
}

PipelineConfig config_from_json_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config: " + path.string());
    std::stringstream buf;
    buf << f.rdbuf();
    return config_from_json(buf.str());
}

void config_to_json_file(const PipelineConfig& cfg, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f << config_to_json(cfg);
}

PartitionSpec spec_for_trace(const Trace& trace, int partitions) {
    const double lo = observed_min(trace.v);
    const double hi = observed_max(trace.v);
    if (!(lo < hi)) throw NumericError("voltage range of the trace is degenerate");
    return PartitionSpec::uniform(lo, hi, partitions);
}

GenerateResult run_generate(const PipelineConfig& cfg) {
    cfg.validate();
    GenerateResult out;

    Trace probe_train = gen_log_square_chirp(cfg.chirp);
    PlantConfig plant = cfg.plant;
    plant.seed = cfg.seed;
    Trace train = simulate_plant(plant, probe_train);
    train.meta.source = "train";
    if (cfg.trim > 0.0) {
        train = trim_trace(train, cfg.trim);
    } else {
        train.meta.notes.push_back("trim=0: startup transient retained");
    }
    out.training = std::move(train);

    Trace probe_val = gen_square_step(cfg.step);
    plant.seed = cfg.seed + 1;  // independent noise stream, still reproducible
    Trace val = simulate_plant(plant, probe_val);
    val.meta.source = "validate";
    if (cfg.trim > 0.0) {
        val = trim_trace(val, cfg.trim);
    } else {
        val.meta.notes.push_back("trim=0: startup transient retained");
    }
    out.validation = std::move(val);

    const std::filesystem::path dir(cfg.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    out.training_path = dir / "train.csv";
    out.validation_path = dir / "validate.csv";
    save_trace_csv(out.training, out.training_path);
    save_trace_csv(out.validation, out.validation_path);
    return out;
}

FitOutcome run_fit(const PipelineConfig& cfg, const Trace& training) {
    cfg.validate();
    if (!training.has_current()) throw ConfigError("training trace has no current column");

    const PartitionSpec spec = spec_for_trace(training, cfg.partitions);

    const auto start = std::chrono::steady_clock::now();
    ExtractionResult extraction = extract_model(training, cfg.smoothing, spec, cfg.ode_order);
    const std::chrono::duration<double> dur = std::chrono::steady_clock::now() - start;

    FitOutcome out;
    out.fit_seconds = dur.count();
    out.report = make_report("bspline-ode", cfg.ode_order, cfg.partitions, training.i,
                             std::span<const double>(extraction.insample_prediction.data(),
                                                     static_cast<std::size_t>(
                                                         extraction.insample_prediction.size())),
                             out.fit_seconds, "train(insample)");
    out.exported.smooth = extraction.smooth;
    out.exported.model = extraction.model;
    out.exported.dt = training.dt;
    out.exported.lambda = extraction.lambda_used;
    out.exported.trained_on = training.meta.source;
    out.exported.seed = training.meta.seed;
    out.extraction = std::move(extraction);
    return out;
}

namespace {

/// Settings for re-smoothing validation data, mirrored from a stored model.
ExtractionSettings settings_from_model(const ExportedModel& model) {
    ExtractionSettings s;
    s.degree = model.smooth.basis.degree();
    const auto& knots = model.smooth.basis.knots().values;
    const int spans = model.smooth.basis.nbasis() - model.smooth.basis.degree();
    s.knot_spacing = (knots.back() - knots.front()) / std::max(1, spans);
    s.lambda = model.lambda;
    s.penalty_order = model.smooth.penalty_order;
    return s;
}

}  // namespace

ValidateOutcome run_validate(const ExportedModel& model, const Trace& validation) {
    validation.validate();
    if (!validation.has_current()) throw ConfigError("validation trace has no current column");

    ValidateOutcome out;
    if (model.model.order == 1) {
        const DiscreteModel dm = discretize(model.model, validation.dt);
        out.prediction = simulate(dm, validation, validation.i.front());
        out.report = make_report("bspline-ode", 1, model.model.spec.count(), validation.i,
                                 out.prediction.i, 0.0, validation.meta.source);
    } else {
        const ExtractionSettings settings = settings_from_model(model);
        const double t0 = validation.t.front();
        const double t1 = validation.t.back();
        const int grid = std::max(2, static_cast<int>(std::ceil((t1 - t0) / settings.knot_spacing)));
        const BSplineBasis basis = make_uniform_basis(t0, t1, grid, settings.degree);
        const SmoothFit fit = fit_penalized(basis, validation.t, validation.i, settings.lambda,
                                            settings.penalty_order, DomainKind::time);
        const Eigen::MatrixXd derivs = compute_derivatives(fit, validation.t, model.model.order);
        const Eigen::VectorXd pred = regression_predict(model.model, validation.v, derivs);
        out.prediction = validation;
        out.prediction.meta.source = "prediction";
        out.prediction.i.assign(pred.data(), pred.data() + pred.size());
        out.report = make_report("bspline-ode-regression", model.model.order, model.model.spec.count(),
                                 validation.i, out.prediction.i, 0.0, validation.meta.source);
    }
    return out;
}

ArxOutcome run_arx_baseline(const PipelineConfig& cfg, const Trace& training, const Trace& validation,
                            int poles, int zeros) {
    if (!training.has_current() || !validation.has_current()) {
        throw ConfigError("ARX baseline needs current columns in both traces");
    }
    const PartitionSpec spec = spec_for_trace(training, cfg.partitions);
    const std::vector<int> pidx = assign_partitions(spec, training.v);

    ArxOutcome out;
    const auto start = std::chrono::steady_clock::now();
    out.model = fit_arx(training.i, training.v, pidx, spec, poles, zeros, training.dt);
    const std::chrono::duration<double> dur = std::chrono::steady_clock::now() - start;
    out.fit_seconds = dur.count();

    const std::vector<double> init(static_cast<std::size_t>(poles), validation.i.front());
    ArxSimResult sim = simulate_arx(out.model, validation, init);
    out.prediction = std::move(sim.trace);
    out.free_run = make_report("arx", poles, cfg.partitions, validation.i, out.prediction.i,
                               out.fit_seconds, validation.meta.source);

    const Trace one_step = predict_arx_one_step(out.model, validation);
    out.one_step = make_report("arx-one-step", poles, cfg.partitions, validation.i, one_step.i,
                               out.fit_seconds, validation.meta.source);
    return out;
}

std::string benchmark_to_csv(const std::vector<BenchmarkRow>& rows) {
    std::ostringstream oss;
    oss << "method,order,median_seconds,insample_gof_percent,runs\n";
    for (const auto& row : rows) {
        oss << row.method << ',' << row.order << ',' << fmt9(row.median_seconds) << ','
            << fmt9(row.insample_gof) << ',';
        for (std::size_t r = 0; r < row.run_seconds.size(); ++r) {
            oss << (r ? ";" : "") << fmt9(row.run_seconds[r]);
        }
        oss << '\n';
    }
    return oss.str();
}

std::string benchmark_to_text(const std::vector<BenchmarkRow>& rows) {
    std::ostringstream oss;
    oss << "fit time per order (median of repeated runs)\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-14s %6s %16s %14s\n", "method", "order", "median_seconds",
                  "insample_gof");
    oss << buf;
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%-14s %6d %16.4f %13.2f%%\n", row.method.c_str(), row.order,
                      row.median_seconds, row.insample_gof);
        oss << buf;
    }
    return oss.str();
}

std::string plotdata_csv(const std::vector<std::filesystem::path>& inputs) {
    std::ostringstream oss;
    oss << "series,x,y\n";
    for (const auto& path : inputs) {
        std::ifstream f(path);
        if (!f) throw IoError("cannot open: " + path.string());
        std::string line;
        std::string header;
        while (std::getline(f, line)) {
            if (line.empty() || line[0] == '#') continue;
            header = line;
            break;
        }
        const std::string stem = path.stem().string();
        if (header == "t,v,i" || header == "t,v") {
            const Trace trace = load_trace_csv(path);
            const bool use_current = trace.has_current();
            for (std::size_t k = 0; k < trace.size(); ++k) {
                oss << stem << ',' << fmt9(trace.t[k]) << ','
                    << fmt9(use_current ? trace.i[k] : trace.v[k]) << '\n';
            }
        } else if (header.rfind("x,phi", 0) == 0) {
            std::vector<std::string> names;
            {
                std::istringstream hs(header);
                std::string cell;
                std::getline(hs, cell, ',');  // x
                while (std::getline(hs, cell, ',')) names.push_back(cell);
            }
            while (std::getline(f, line)) {
                if (line.empty()) continue;
                std::istringstream rs(line);
                std::string cell;
                std::getline(rs, cell, ',');
                const std::string x = cell;
                std::size_t col = 0;
                while (std::getline(rs, cell, ',')) {
                    if (col >= names.size()) throw IoError(path.string() + ": row wider than header");
                    oss << names[col] << ',' << x << ',' << cell << '\n';
                    ++col;
                }
            }
        } else {
            throw IoError(path.string() + ": unknown file schema (header '" + header + "')");
        }
    }
    return oss.str();
}

std::string basis_dump_csv(double lo, double hi, int grid_size, int degree, int samples) {
    if (samples < 2) throw ConfigError("basis dump needs at least two sample points");
    const BSplineBasis basis = make_uniform_basis(lo, hi, grid_size, degree);
    std::vector<double> xs(static_cast<std::size_t>(samples));
    for (int s = 0; s < samples; ++s) {
        xs[static_cast<std::size_t>(s)] = lo + (hi - lo) * s / (samples - 1);
    }
    xs.back() = hi;
    const BasisMatrix bm = eval_basis(basis, xs, 0);
    std::ostringstream oss;
    oss << "x";
    for (int jcol = 0; jcol < basis.nbasis(); ++jcol) oss << ",phi" << jcol;
    oss << '\n';
    for (int s = 0; s < samples; ++s) {
        oss << fmt9(xs[static_cast<std::size_t>(s)]);
        for (int jcol = 0; jcol < basis.nbasis(); ++jcol) {
            oss << ',' << fmt9(bm.values(s, jcol));
        }
        oss << '\n';
    }
    return oss.str();
}

}  // namespace splinedyn
