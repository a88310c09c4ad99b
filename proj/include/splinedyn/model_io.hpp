#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "splinedyn/ode_extraction.hpp"
#include "splinedyn/smoothing.hpp"

namespace splinedyn {

inline constexpr const char* kModelFormatVersion = "splinedyn-model/1";

/// Everything needed to reuse a fitted model: the time-domain smooth fit and
/// the per-partition ODE coefficients.
struct ExportedModel {
    SmoothFit smooth;
    PartitionedODEModel model;
    double dt = 0.0;
    double lambda = 0.0;
    std::string trained_on;
    std::uint64_t seed = 0;
};

void save_model(const ExportedModel& model, const std::filesystem::path& path);
ExportedModel load_model(const std::filesystem::path& path);

}  // namespace splinedyn
