#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "splinedyn/errors.hpp"
#include "splinedyn/metrics.hpp"
#include "splinedyn/pipeline.hpp"

namespace {

using namespace splinedyn;

constexpr int kExitOk = 0;
constexpr int kExitValidationFailed = 1;
constexpr int kExitConfigError = 2;

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f << text;
    if (!f) throw IoError("write failed: " + path.string());
}

void print_report(const FitReport& report) {
    const ComparisonTable table = compare_report(std::vector<FitReport>{report});
    std::cout << table.to_text();
}

struct CommonOpts {
    std::string config_path;

    PipelineConfig load() const {
        if (config_path.empty()) return PipelineConfig{};
        return config_from_json_file(config_path);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"splinedyn: spline-based extraction of aggregate Volt-Var inverter dynamics"};
    app.require_subcommand(1);

    CommonOpts common;

    // ---- generate ----
    auto* gen = app.add_subcommand("generate", "produce training (chirp) and validation (step) traces");
    gen->add_option("--config", common.config_path, "pipeline config JSON");
    std::uint64_t gen_seed = 0;
    gen->add_option("--seed", gen_seed, "RNG seed (required; no hidden entropy)")->required();
    std::string gen_out;
    gen->add_option("--out", gen_out, "output directory (overrides config)");
    std::optional<double> gen_trim, gen_chirp_dur, gen_step_dur, gen_dt, gen_tau, gen_noise, gen_vlag;
    gen->add_option("--trim", gen_trim, "seconds trimmed from each trace start");
    gen->add_option("--chirp-duration", gen_chirp_dur, "training excitation length, s");
    gen->add_option("--step-duration", gen_step_dur, "validation excitation length, s");
    gen->add_option("--dt", gen_dt, "sample step for both traces, s");
    gen->add_option("--tau", gen_tau, "plant aggregate lag, s");
    gen->add_option("--noise", gen_noise, "plant current noise sigma, p.u.");
    gen->add_option("--v-lag", gen_vlag, "plant measured-voltage lag, s");

    // ---- fit ----
    auto* fit = app.add_subcommand("fit", "extract the partitioned ODE model from a training trace");
    fit->add_option("--config", common.config_path, "pipeline config JSON");
    std::string fit_train;
    fit->add_option("--train", fit_train, "training trace CSV")->required();
    std::string fit_model_out = "model.json";
    fit->add_option("--model-out", fit_model_out, "model file to write");
    std::string fit_report_out;
    fit->add_option("--report", fit_report_out, "in-sample report CSV to write");
    std::optional<int> fit_order, fit_partitions, fit_degree, fit_grid;
    std::optional<double> fit_lambda, fit_knot_spacing;
    bool fit_ocv = false;
    bool fit_parallel = false;
    fit->add_option("--order", fit_order, "ODE order 1..4");
    fit->add_option("--partitions,-k", fit_partitions, "voltage partition count");
    fit->add_option("--degree", fit_degree, "spline degree");
    fit->add_option("--grid-size", fit_grid, "explicit time-domain span count");
    fit->add_option("--lambda", fit_lambda, "fixed smoothing parameter");
    fit->add_option("--knot-spacing", fit_knot_spacing, "seconds between time knots");
    fit->add_flag("--ocv", fit_ocv, "select lambda by ordinary cross validation");
    fit->add_flag("--parallel", fit_parallel, "fit partitions concurrently");

    // ---- validate ----
    auto* val = app.add_subcommand("validate", "free-run a stored model against a measured trace");
    std::string val_model, val_data, val_pred_out, val_report_out;
    val->add_option("--model", val_model, "model JSON from `fit`")->required();
    val->add_option("--data", val_data, "measured trace CSV")->required();
    val->add_option("--out", val_pred_out, "prediction trace CSV to write");
    val->add_option("--report", val_report_out, "report CSV to write");
    std::optional<double> val_assert_gof;
    val->add_option("--assert-gof", val_assert_gof, "exit 1 unless GoF%% >= this value");

    // ---- benchmark ----
    auto* bench = app.add_subcommand("benchmark", "fit-time scan over model orders, both pipelines");
    bench->add_option("--config", common.config_path, "pipeline config JSON");
    std::string bench_train;
    bench->add_option("--train", bench_train, "training trace CSV")->required();
    std::string bench_orders = "1,2,3,4";
    bench->add_option("--orders", bench_orders, "comma-separated order list");
    int bench_repeats = 5;
    bench->add_option("--repeats", bench_repeats, "timing repetitions per order");
    int bench_arx_zeros = 1;
    bench->add_option("--arx-zeros", bench_arx_zeros, "ARX numerator order");
    std::string bench_out;
    bench->add_option("--out", bench_out, "benchmark CSV to write");

    // ---- plotdata ----
    auto* plot = app.add_subcommand("plotdata", "convert traces/basis dumps to long-format series CSV");
    std::vector<std::string> plot_inputs;
    plot->add_option("inputs", plot_inputs, "input CSV files");
    std::string plot_out;
    plot->add_option("--out", plot_out, "output CSV (stdout when omitted)");

    // ---- basis-dump ----
    auto* dump = app.add_subcommand("basis-dump", "sample every basis function over a domain");
    double dump_lo = 0.88, dump_hi = 1.10;
    int dump_grid = 17, dump_degree = 3, dump_samples = 441;
    std::string dump_out;
    dump->add_option("--lo", dump_lo, "domain lower bound");
    dump->add_option("--hi", dump_hi, "domain upper bound");
    dump->add_option("--grid-size", dump_grid, "knot span count");
    dump->add_option("--degree", dump_degree, "spline degree");
    dump->add_option("--samples", dump_samples, "sample point count");
    dump->add_option("--out", dump_out, "output CSV (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (gen->parsed()) {
            PipelineConfig cfg = common.load();
            cfg.seed = gen_seed;
            if (!gen_out.empty()) cfg.output_dir = gen_out;
            if (gen_trim) cfg.trim = *gen_trim;
            if (gen_chirp_dur) cfg.chirp.total_duration = *gen_chirp_dur;
            if (gen_step_dur) cfg.step.total_duration = *gen_step_dur;
            if (gen_dt) {
                cfg.chirp.sample_dt = *gen_dt;
                cfg.step.sample_dt = *gen_dt;
            }
            if (gen_tau) cfg.plant.tau = *gen_tau;
            if (gen_noise) cfg.plant.noise_sigma = *gen_noise;
            if (gen_vlag) cfg.plant.v_meas_tau = *gen_vlag;
            const GenerateResult result = run_generate(cfg);
            config_to_json_file(cfg, std::filesystem::path(cfg.output_dir) / "config.json");
            std::cout << "wrote " << result.training_path.string() << " ("
                      << result.training.size() << " samples)\n";
            std::cout << "wrote " << result.validation_path.string() << " ("
                      << result.validation.size() << " samples)\n";
            for (const auto& note : result.training.meta.notes) std::cerr << note << '\n';
            for (const auto& note : result.validation.meta.notes) std::cerr << note << '\n';
        } else if (fit->parsed()) {
            PipelineConfig cfg = common.load();
            if (fit_order) cfg.ode_order = *fit_order;
            if (fit_partitions) cfg.partitions = *fit_partitions;
            if (fit_degree) cfg.smoothing.degree = *fit_degree;
            if (fit_grid) cfg.smoothing.grid_size = *fit_grid;
            if (fit_lambda) cfg.smoothing.lambda = *fit_lambda;
            if (fit_knot_spacing) cfg.smoothing.knot_spacing = *fit_knot_spacing;
            if (fit_ocv) cfg.smoothing.use_ocv = true;
            if (fit_parallel) cfg.smoothing.parallel = true;
            const Trace training = load_trace_csv(fit_train);
            const FitOutcome outcome = run_fit(cfg, training);
            save_model(outcome.exported, fit_model_out);
            std::cout << "wrote " << fit_model_out << '\n';
            print_report(outcome.report);
            if (!fit_report_out.empty()) {
                write_text_file(fit_report_out,
                                compare_report(std::vector<FitReport>{outcome.report}).to_csv());
            }
        } else if (val->parsed()) {
            const ExportedModel model = load_model(val_model);
            const Trace data = load_trace_csv(val_data);
            const ValidateOutcome outcome = run_validate(model, data);
            if (!val_pred_out.empty()) save_trace_csv(outcome.prediction, val_pred_out);
            print_report(outcome.report);
            if (!val_report_out.empty()) {
                write_text_file(val_report_out,
                                compare_report(std::vector<FitReport>{outcome.report}).to_csv());
            }
            if (val_assert_gof && outcome.report.gof_percent < *val_assert_gof) {
                std::cerr << "GoF " << outcome.report.gof_percent << "% below required "
                          << *val_assert_gof << "%\n";
                return kExitValidationFailed;
            }
        } else if (bench->parsed()) {
            PipelineConfig cfg = common.load();
            const Trace training = load_trace_csv(bench_train);
            std::vector<int> orders;
            std::stringstream ss(bench_orders);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                if (!tok.empty()) orders.push_back(std::stoi(tok));
            }
            const PartitionSpec spec = spec_for_trace(training, cfg.partitions);
            const std::vector<BenchmarkRow> rows =
                benchmark_orders(training, cfg.smoothing, spec, orders, bench_arx_zeros, bench_repeats);
            std::cout << benchmark_to_text(rows);
            if (!bench_out.empty()) write_text_file(bench_out, benchmark_to_csv(rows));
        } else if (plot->parsed()) {
            std::vector<std::filesystem::path> inputs(plot_inputs.begin(), plot_inputs.end());
            const std::string csv = plotdata_csv(inputs);
            if (plot_out.empty()) std::cout << csv;
            else write_text_file(plot_out, csv);
        } else if (dump->parsed()) {
            const std::string csv = basis_dump_csv(dump_lo, dump_hi, dump_grid, dump_degree, dump_samples);
            if (dump_out.empty()) std::cout << csv;
            else write_text_file(dump_out, csv);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfigError;
    }
    return kExitOk;
}
