#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "splinedyn/metrics.hpp"
#include "splinedyn/model_io.hpp"
#include "splinedyn/ode_extraction.hpp"
#include "splinedyn/plant.hpp"
#include "splinedyn/signal_gen.hpp"
#include "splinedyn/sysid.hpp"
#include "splinedyn/trace.hpp"

namespace splinedyn {

/// Full experiment configuration. The plant type defaults describe a bare
/// first-order lag; the pipeline defaults below pick a faster aggregate
/// response plus a measured-voltage lag so the recorded bus voltage sweeps
/// the partition range the way a physical feeder would.
struct PipelineConfig {
    PipelineConfig() {
        plant.tau = 0.005;
        plant.v_meas_tau = 0.15;
    }

    ChirpConfig chirp;
    StepConfig step;
    PlantConfig plant;
    ExtractionSettings smoothing;
    int partitions = 20;
    int ode_order = 1;
    double trim = 1.2;
    std::uint64_t seed = 1;
    std::string output_dir = "out";

    void validate() const;
};

PipelineConfig config_from_json_file(const std::filesystem::path& path);
void config_to_json_file(const PipelineConfig& cfg, const std::filesystem::path& path);
std::string config_to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(const std::string& text);

struct GenerateResult {
    Trace training;
    Trace validation;
    std::filesystem::path training_path;
    std::filesystem::path validation_path;
};

/// Chirp-excited training trace and step-excited validation trace through the
/// surrogate plant, trimmed of the startup transient and written to CSV.
GenerateResult run_generate(const PipelineConfig& cfg);

struct FitOutcome {
    ExportedModel exported;
    ExtractionResult extraction;
    FitReport report;        ///< in-sample regression accuracy
    double fit_seconds = 0.0;
};

FitOutcome run_fit(const PipelineConfig& cfg, const Trace& training);

struct ValidateOutcome {
    FitReport report;
    Trace prediction;
};

/// Order-1 models simulate free-running Backward Euler; higher orders are
/// scored by regression prediction with derivatives re-smoothed from the
/// validation current.
ValidateOutcome run_validate(const ExportedModel& model, const Trace& validation);

/// ARX(n, m) baseline trained on `training` and free-run on `validation`,
/// using the same voltage partitioning as the spline pipeline.
struct ArxOutcome {
    ARXModel model;
    FitReport free_run;
    FitReport one_step;
    Trace prediction;
    double fit_seconds = 0.0;
};

ArxOutcome run_arx_baseline(const PipelineConfig& cfg, const Trace& training, const Trace& validation,
                            int poles, int zeros);

std::string benchmark_to_csv(const std::vector<BenchmarkRow>& rows);
std::string benchmark_to_text(const std::vector<BenchmarkRow>& rows);

/// Long-format (series,x,y) CSV from trace CSVs or basis-dump CSVs.
std::string plotdata_csv(const std::vector<std::filesystem::path>& inputs);

/// Wide CSV (x, phi0, ..., phiN-1) sampling every basis function.
std::string basis_dump_csv(double lo, double hi, int grid_size, int degree, int samples);

/// Partition spec spanning the observed voltage range of a trace.
PartitionSpec spec_for_trace(const Trace& trace, int partitions);

}  // namespace splinedyn
