#pragma once

#include "arbor/config.hpp"
#include "arbor/result_table.hpp"

#include <string>
#include <vector>

namespace arbor {

inline constexpr const char* kArtifactVersion = "1.0.0";

struct ExperimentInfo {
  std::string name;
  std::string summary;
  /// Acceptance criteria the default configuration checks.
  std::vector<int> criteria;
  std::string defaults;
  std::string schema;
};

const std::vector<ExperimentInfo>& experiment_catalog();
const ExperimentInfo& experiment_info(const std::string& name);

/// Runs one named experiment. Configuration problems throw ConfigError
/// (or invalid_argument / length_error / out_of_range from the modules);
/// the table carries the pass flags. No files are written.
ResultTable run_experiment(const ExperimentConfig& cfg);

/// Catalog text for --help: names, criteria, defaults and CSV schemas.
std::string experiment_help();

}  // namespace arbor
