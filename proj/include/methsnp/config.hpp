#pragma once

#include "methsnp/basis.hpp"
#include "methsnp/harness.hpp"
#include "methsnp/simgen.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace methsnp {

// "form:rho", e.g. "exponential:0.1".
WeightSpec parse_weight_spec(std::string_view text);

nlohmann::json to_json(const SimConfig& config);
nlohmann::json to_json(const ArrayDesign& design);
// The worker count is left out so the echo does not depend on it.
nlohmann::json to_json(const StudySpec& spec);

// Keys absent from the document keep their values in `base`. Unknown keys
// and ill-typed values throw UsageError.
SimConfig sim_config_from_json(const nlohmann::json& doc, SimConfig base = {});
ArrayDesign array_design_from_json(const nlohmann::json& doc, ArrayDesign base = {});
// Starts from default_study of the document's "study" kind.
StudySpec study_spec_from_json(const nlohmann::json& doc);

// Settings for fit, test, smooth and baseline on user data.
struct AnalysisOptions {
  SmoothingConfig smoothing;
  WeightSpec weight;
  int basis_size = 10;
  LambdaSearch search;
  // Binary phenotype: y in {0,1} is replaced by logistic working residuals.
  bool binary = false;
  // Phenotype columns used by the logistic first stage; empty means all.
  // Columns not listed stay covariates of the functional model.
  std::vector<std::string> first_stage_covariates;
  double window_bp = 500000.0;
  double alpha = 0.05;

  void validate() const;
};

nlohmann::json to_json(const AnalysisOptions& options);
AnalysisOptions analysis_options_from_json(const nlohmann::json& doc, AnalysisOptions base = {});

// Reads a TOML (.toml) or JSON (anything else) file into JSON.
nlohmann::json load_config_file(const std::filesystem::path& path);
nlohmann::json parse_toml(std::string_view text, std::string_view source = "config");

}  // namespace methsnp
