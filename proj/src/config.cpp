#include "arbor/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <variant>

namespace arbor {

ConfigError::ConfigError(std::size_t line, const std::string& message)
    : std::invalid_argument(line ? "config line " + std::to_string(line) + ": " + message : "config: " + message),
      line_(line) {}

namespace {

using C = ExperimentConfig;
using Field = std::variant<std::string C::*, std::uint64_t C::*, std::optional<std::uint64_t> C::*,
                           std::optional<double> C::*, std::optional<std::vector<double>> C::*,
                           std::optional<std::vector<std::uint64_t>> C::*>;

struct KeySpec {
  const char* name;
  Field field;
  const char* doc;
};

const std::vector<KeySpec>& keys() {
  static const std::vector<KeySpec> k = {
      {"experiment", &C::experiment, "string: experiment name (or --experiment)"},
      {"graph", &C::graph, "string: default | torus | complete | corpus | file:PATH | inline:'n m; i j beta; ...'"},
      {"beta", &C::beta, "list of reals: edge weight(s)"},
      {"alpha", &C::alpha, "list of reals: mean-field parameter(s), beta = alpha / N"},
      {"h", &C::h, "list of reals: uniform vertex field(s)"},
      {"L", &C::L, "list of integers: torus side length(s)"},
      {"d", &C::d, "integer: torus dimension"},
      {"N", &C::N, "list of integers: complete-graph size(s)"},
      {"r", &C::r, "list of integers: two-point distances along the first axis"},
      {"sweeps", &C::sweeps, "integer: forest-sampler sweeps per chain, burn-in included"},
      {"burn_in", &C::burn_in, "integer: forest-sampler burn-in sweeps (default 10 L^2 on tori)"},
      {"steps", &C::steps, "integer: MALA steps per chain, burn-in included (0 disables MALA where optional)"},
      {"mala_burn_in", &C::mala_burn_in, "integer: MALA burn-in steps"},
      {"chains", &C::chains, "integer: independent chains, merged in chain order"},
      {"seed", &C::seed, "integer: base seed (or --seed)"},
      {"max_vertices", &C::max_vertices, "integer: corpus size bound"},
      {"draws", &C::draws, "integer: random rational weight draws per corpus graph"},
      {"forms", &C::forms, "integer: random Grassmann forms for the Ward identities"},
      {"sigmas", &C::sigmas, "real: Monte Carlo agreement band in standard errors"},
      {"max_stderr", &C::max_stderr, "real: largest admissible standard error"},
      {"tol_exact_rel", &C::tol_exact_rel, "real: quadrature vs exact relative tolerance"},
      {"tol_subcritical_rel", &C::tol_subcritical_rel, "real: N P vs alpha/(1-alpha) relative tolerance"},
      {"tol_supercritical_abs", &C::tol_supercritical_abs, "real: P vs ((alpha-1)/alpha)^2 absolute tolerance"},
      {"tol_critical_rel", &C::tol_critical_rel, "real: N^{2/3} P vs c relative tolerance"},
      {"out", &C::out, "string: output directory (or --out)"},
  };
  return k;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& text, std::size_t line, const std::string& key) {
  std::uint64_t v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end)
    throw ConfigError(line, "key '" + key + "' expects a non-negative integer, got '" + text + "'");
  return v;
}

double parse_real(const std::string& text, std::size_t line, const std::string& key) {
  double v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ConfigError(line, "key '" + key + "' expects a real number, got '" + text + "'");
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(trim(part));
  if (!text.empty() && text.back() == ',') out.push_back("");
  return out;
}

template <class T, class Parse>
std::vector<T> parse_list(const std::string& text, std::size_t line, const std::string& key, Parse parse) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) out.push_back(parse(item, line, key));
  if (out.empty()) throw ConfigError(line, "key '" + key + "' expects a non-empty list");
  return out;
}

std::string format_real(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, bool experiment_optional) {
  ExperimentConfig cfg;
  std::map<std::string, std::size_t> seen;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string content = raw.substr(0, raw.find('#'));
    content = trim(content);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value'");
    const std::string key = trim(content.substr(0, eq)), value = trim(content.substr(eq + 1));
    if (key.empty()) throw ConfigError(line, "missing key before '='");
    const auto spec = std::find_if(keys().begin(), keys().end(), [&](const KeySpec& k) { return key == k.name; });
    if (spec == keys().end()) throw ConfigError(line, "unknown key '" + key + "'");
    if (auto [it, fresh] = seen.emplace(key, line); !fresh)
      throw ConfigError(line, "duplicate key '" + key + "' (first set on line " + std::to_string(it->second) + ")");
    std::visit(
        [&](auto member) {
          using M = std::remove_reference_t<decltype(cfg.*member)>;
          if constexpr (std::is_same_v<M, std::string>) {
            if (value.empty()) throw ConfigError(line, "key '" + key + "' expects a non-empty string");
            cfg.*member = value;
          } else if constexpr (std::is_same_v<M, std::uint64_t> || std::is_same_v<M, std::optional<std::uint64_t>>) {
            cfg.*member = parse_u64(value, line, key);
          } else if constexpr (std::is_same_v<M, std::optional<double>>) {
            cfg.*member = parse_real(value, line, key);
          } else if constexpr (std::is_same_v<M, std::optional<std::vector<double>>>) {
            cfg.*member = parse_list<double>(value, line, key, parse_real);
          } else {
            cfg.*member = parse_list<std::uint64_t>(value, line, key, parse_u64);
          }
        },
        spec->field);
  }
  if (!experiment_optional && cfg.experiment.empty())
    throw ConfigError(line + 1, "missing required key 'experiment' (set it here or pass --experiment)");
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path, bool experiment_optional) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), experiment_optional);
}

std::string emit_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  for (const auto& spec : keys()) {
    std::visit(
        [&](auto member) {
          const auto& v = cfg.*member;
          using M = std::remove_cvref_t<decltype(v)>;
          if constexpr (std::is_same_v<M, std::string>) {
            if (!v.empty()) out << spec.name << " = " << v << '\n';
          } else if constexpr (std::is_same_v<M, std::uint64_t>) {
            out << spec.name << " = " << v << '\n';
          } else if constexpr (std::is_same_v<M, std::optional<std::uint64_t>>) {
            if (v) out << spec.name << " = " << *v << '\n';
          } else if constexpr (std::is_same_v<M, std::optional<double>>) {
            if (v) out << spec.name << " = " << format_real(*v) << '\n';
          } else {
            if (!v) return;
            out << spec.name << " =";
            for (std::size_t k = 0; k < v->size(); ++k) {
              out << (k ? ", " : " ");
              if constexpr (std::is_same_v<M, std::optional<std::vector<double>>>)
                out << format_real((*v)[k]);
              else
                out << (*v)[k];
            }
            out << '\n';
          }
        },
        spec.field);
  }
  return out.str();
}

std::string config_help() {
  std::ostringstream out;
  for (const auto& spec : keys()) out << "  " << std::left << std::setw(22) << spec.name << spec.doc << '\n';
  return out.str();
}

}  // namespace arbor
