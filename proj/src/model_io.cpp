#include "splinedyn/model_io.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "splinedyn/errors.hpp"

namespace splinedyn {

namespace {

using nlohmann::json;

json partition_to_json(const PartitionCoefficients& rec) {
    return json{{"voltage_gain", rec.voltage_gain},
                {"derivative_gains", rec.derivative_gains},
                {"intercept", rec.intercept},
                {"sample_count", rec.sample_count},
                {"rss", rec.rss},
                {"degenerate", rec.degenerate},
                {"inherited_from", rec.inherited_from},
                {"voltage_dropped", rec.voltage_dropped},
                {"stable", rec.stable}};
}

PartitionCoefficients partition_from_json(const json& j) {
    PartitionCoefficients rec;
    rec.voltage_gain = j.at("voltage_gain").get<double>();
    rec.derivative_gains = j.at("derivative_gains").get<std::vector<double>>();
    rec.intercept = j.at("intercept").get<double>();
    rec.sample_count = j.at("sample_count").get<int>();
    rec.rss = j.at("rss").get<double>();
    rec.degenerate = j.at("degenerate").get<bool>();
    rec.inherited_from = j.at("inherited_from").get<int>();
    rec.voltage_dropped = j.at("voltage_dropped").get<bool>();
    rec.stable = j.at("stable").get<bool>();
    return rec;
}

}  // namespace

void save_model(const ExportedModel& model, const std::filesystem::path& path) {
    json j;
    j["version"] = kModelFormatVersion;
    j["dt"] = model.dt;
    j["lambda"] = model.lambda;
    j["trained_on"] = model.trained_on;
    j["seed"] = model.seed;

    json smooth;
    smooth["knots"] = model.smooth.basis.knots().values;
    smooth["degree"] = model.smooth.basis.degree();
    smooth["coefficients"] = std::vector<double>(
        model.smooth.coefficients.data(),
        model.smooth.coefficients.data() + model.smooth.coefficients.size());
    smooth["lambda"] = model.smooth.lambda;
    smooth["penalty_order"] = model.smooth.penalty_order;
    j["smoothing"] = smooth;

    json part;
    part["edges"] = model.model.spec.edges;
    part["order"] = model.model.order;
    json records = json::array();
    for (const auto& rec : model.model.partitions) records.push_back(partition_to_json(rec));
    part["records"] = records;
    j["partitions"] = part;

    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f << j.dump(2) << '\n';
    if (!f) throw IoError("write failed: " + path.string());
}

ExportedModel load_model(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path.string());
    json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw IoError(path.string() + ": invalid JSON (" + e.what() + ")");
    }
    try {
        if (j.at("version").get<std::string>() != kModelFormatVersion) {
            throw IoError(path.string() + ": unsupported model format version");
        }
        ExportedModel out;
        out.dt = j.at("dt").get<double>();
        out.lambda = j.at("lambda").get<double>();
        out.trained_on = j.value("trained_on", std::string{});
        out.seed = j.value("seed", std::uint64_t{0});

        const json& smooth = j.at("smoothing");
        KnotVector kv{smooth.at("knots").get<std::vector<double>>()};
        BSplineBasis basis(std::move(kv), smooth.at("degree").get<int>());
        const auto coeffs = smooth.at("coefficients").get<std::vector<double>>();
        if (static_cast<int>(coeffs.size()) != basis.nbasis()) {
            throw IoError(path.string() + ": coefficient count does not match the basis");
        }
        out.smooth.basis = std::move(basis);
        out.smooth.coefficients =
            Eigen::Map<const Eigen::VectorXd>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
        out.smooth.lambda = smooth.at("lambda").get<double>();
        out.smooth.penalty_order = smooth.at("penalty_order").get<int>();
        out.smooth.domain = DomainKind::time;

        const json& part = j.at("partitions");
        out.model.spec.edges = part.at("edges").get<std::vector<double>>();
        out.model.order = part.at("order").get<int>();
        out.model.dt = out.dt;
        for (const auto& rec : part.at("records")) {
            out.model.partitions.push_back(partition_from_json(rec));
        }
        out.model.validate();
        return out;
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": malformed model file (" + e.what() + ")");
    }
}

}  // namespace splinedyn
