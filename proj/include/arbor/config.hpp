#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace arbor {

/// Flat experiment configuration. Unset optional fields take the selected
/// experiment's documented default (see `config_help` and `experiment_help`).
struct ExperimentConfig {
  std::string experiment;
  /// default | torus | complete | corpus | file:PATH | inline:TEXT, where TEXT
  /// is the graph text format with ';' separating lines.
  std::string graph = "default";

  std::optional<std::vector<double>> beta;
  std::optional<std::vector<double>> alpha;
  std::optional<std::vector<double>> h;
  std::optional<std::vector<std::uint64_t>> L;
  std::optional<std::uint64_t> d;
  std::optional<std::vector<std::uint64_t>> N;
  std::optional<std::vector<std::uint64_t>> r;

  std::optional<std::uint64_t> sweeps;
  std::optional<std::uint64_t> burn_in;
  std::optional<std::uint64_t> steps;
  std::optional<std::uint64_t> mala_burn_in;
  std::optional<std::uint64_t> chains;
  std::uint64_t seed = 1;

  std::optional<std::uint64_t> max_vertices;
  std::optional<std::uint64_t> draws;
  std::optional<std::uint64_t> forms;

  std::optional<double> sigmas;
  std::optional<double> max_stderr;
  std::optional<double> tol_exact_rel;
  std::optional<double> tol_subcritical_rel;
  std::optional<double> tol_supercritical_abs;
  std::optional<double> tol_critical_rel;

  std::string out = ".";

  bool operator==(const ExperimentConfig&) const = default;
};

/// A configuration error tied to a line of the input (0 when not applicable).
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Parses `key = value` lines; `#` starts a comment; lists are comma
/// separated. Unknown keys, duplicates, malformed values and (unless
/// `experiment_optional`) a missing `experiment` key are errors.
ExperimentConfig parse_config(const std::string& text, bool experiment_optional = false);
ExperimentConfig parse_config_file(const std::string& path, bool experiment_optional = false);

/// Writes every set field, one per line, in a form parse_config reads back
/// to an equal configuration.
std::string emit_config(const ExperimentConfig& cfg);

/// One line per key: name, type and meaning.
std::string config_help();

}  // namespace arbor
