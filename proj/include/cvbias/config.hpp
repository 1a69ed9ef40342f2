#pragma once

#include "cvbias/cv.hpp"
#include "cvbias/dgp.hpp"
#include "cvbias/estimators.hpp"
#include "cvbias/mc.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace cvbias::config {

using json = nlohmann::json;

/// A resolved experiment document: {dgp, models, schemes, experiment}.
struct ExperimentConfig {
    mc::McConfig mc;
    /// Optional AR(1) coefficient grid for sweeps.
    std::vector<double> rho_grid;

    bool operator==(const ExperimentConfig&) const = default;
};

// Every parser rejects unknown keys; ConfigError messages carry the JSON
// pointer of the offending field.
dgp::ErrorSpec error_spec_from_json(const json& j, const std::string& where = "/errors");
dgp::DgpSpec dgp_from_json(const json& j, const std::string& where = "/dgp");
estimators::ModelSpec model_from_json(const json& j, const std::string& where = "/models/0");
cv::CvScheme scheme_from_json(const json& j, const std::string& where = "/schemes/0");
ExperimentConfig experiment_from_json(const json& j);

json to_json(const dgp::ErrorSpec& e);
json to_json(const dgp::DgpSpec& d);
json to_json(const estimators::ModelSpec& m);
json to_json(const cv::CvScheme& s);
json to_json(const ExperimentConfig& c);

/// Parse a JSON document; syntax errors report line and column.
json parse_text(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load(const std::filesystem::path& path);

}  // namespace cvbias::config
