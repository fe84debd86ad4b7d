#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace arbor {

/// One measured or computed quantity. `value` and `reference` are text so
/// exact rationals survive; `pass` is set only when a reference and a
/// tolerance exist.
struct ResultRow {
  std::vector<std::string> keys;
  std::string quantity;
  std::string value;
  std::optional<double> stderr_value;
  std::optional<std::string> reference;
  std::optional<std::string> tolerance;
  std::optional<bool> pass;
  /// Acceptance criterion the row contributes to, 0 for none.
  int criterion = 0;
  std::string note;
};

/// Numeric columns for a gnuplot-ready .dat file.
struct PlotData {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ResultTable {
  std::string experiment;
  std::vector<std::string> key_columns;
  /// A deque so references returned by add() stay valid.
  std::deque<ResultRow> rows;
  std::vector<PlotData> plots;
  /// Preformatted files written next to the main table as <experiment>_<name>
  /// (name carries the extension), e.g. chain statistics CSVs.
  struct Attachment {
    std::string name;
    std::string content;
  };
  std::vector<Attachment> attachments;
  std::vector<std::string> warnings;

  std::string version;
  std::uint64_t seed = 0;
  std::string config;
  /// Excluded from the CSV so identical runs give byte-identical files.
  double wall_seconds = 0.0;

  ResultRow& add(std::vector<std::string> keys, std::string quantity, std::string value);
  /// True when every row carrying a pass flag passed.
  bool all_pass() const;
  std::size_t n_checked() const;
  std::size_t n_failed() const;
  /// All criteria with at least one pass flag, ascending.
  std::vector<int> criteria() const;
  /// True when every pass-flagged row of `criterion` passed and there is one.
  bool criterion_pass(int criterion) const;
};

/// Header comment lines (`# key: value`), then
/// key columns..., quantity, value, stderr, reference, tolerance, pass, criterion, note.
void emit_csv(const ResultTable& table, const std::string& path);
std::string to_csv(const ResultTable& table);
/// The same content plus wall time, warnings and plots as JSON.
void emit_json(const ResultTable& table, const std::string& path);
std::string to_json(const ResultTable& table);
/// Whitespace-separated columns with a `#` header line.
std::string to_dat(const PlotData& plot);

/// Writes <dir>/<experiment>.csv, .json, one <experiment>_<plot>.dat per plot
/// and the attachments; returns the paths written.
std::vector<std::string> write_outputs(const ResultTable& table, const std::string& dir);

/// Shortest round-trip representation of a double.
std::string format_number(double x);

}  // namespace arbor
