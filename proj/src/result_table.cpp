#include "arbor/result_table.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace arbor {

ResultRow& ResultTable::add(std::vector<std::string> keys, std::string quantity, std::string value) {
  if (keys.size() != key_columns.size()) throw std::logic_error("ResultTable: key count does not match columns");
  ResultRow row;
  row.keys = std::move(keys);
  row.quantity = std::move(quantity);
  row.value = std::move(value);
  rows.push_back(std::move(row));
  return rows.back();
}

bool ResultTable::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const ResultRow& r) { return r.pass.value_or(true); });
}

std::size_t ResultTable::n_checked() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const ResultRow& r) { return r.pass.has_value(); }));
}

std::size_t ResultTable::n_failed() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const ResultRow& r) { return r.pass.has_value() && !*r.pass; }));
}

std::vector<int> ResultTable::criteria() const {
  std::set<int> c;
  for (const auto& r : rows)
    if (r.criterion && r.pass) c.insert(r.criterion);
  return {c.begin(), c.end()};
}

bool ResultTable::criterion_pass(int criterion) const {
  bool any = false;
  for (const auto& r : rows) {
    if (r.criterion != criterion || !r.pass) continue;
    any = true;
    if (!*r.pass) return false;
  }
  return any;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t k = 0; k < fields.size(); ++k) out << (k ? "," : "") << csv_field(fields[k]);
  out << '\n';
}

}  // namespace

std::string to_csv(const ResultTable& t) {
  std::ostringstream out;
  out << "# experiment: " << t.experiment << '\n';
  out << "# version: " << t.version << '\n';
  out << "# seed: " << t.seed << '\n';
  out << "# checks: " << t.n_checked() << ", failed: " << t.n_failed() << '\n';
  std::vector<std::string> header = t.key_columns;
  for (const char* c : {"quantity", "value", "stderr", "reference", "tolerance", "pass", "criterion", "note"})
    header.emplace_back(c);
  write_row(out, header);
  for (const auto& r : t.rows) {
    std::vector<std::string> f = r.keys;
    f.push_back(r.quantity);
    f.push_back(r.value);
    f.push_back(r.stderr_value ? format_number(*r.stderr_value) : "");
    f.push_back(r.reference.value_or(""));
    f.push_back(r.tolerance.value_or(""));
    f.push_back(r.pass ? (*r.pass ? "true" : "false") : "");
    f.push_back(r.criterion ? std::to_string(r.criterion) : "");
    f.push_back(r.note);
    write_row(out, f);
  }
  return out.str();
}

void emit_csv(const ResultTable& table, const std::string& path) { write_file(path, to_csv(table)); }

std::string to_json(const ResultTable& t) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["experiment"] = t.experiment;
  j["metadata"] = {{"version", t.version}, {"seed", t.seed}, {"wall_seconds", t.wall_seconds}, {"config", t.config}};
  j["all_pass"] = t.all_pass();
  j["checks"] = t.n_checked();
  j["failed"] = t.n_failed();
  j["key_columns"] = t.key_columns;
  ordered_json rows = ordered_json::array();
  for (const auto& r : t.rows) {
    ordered_json row;
    for (std::size_t k = 0; k < r.keys.size(); ++k) row[t.key_columns[k]] = r.keys[k];
    row["quantity"] = r.quantity;
    row["value"] = r.value;
    row["stderr"] = r.stderr_value ? ordered_json(*r.stderr_value) : ordered_json(nullptr);
    row["reference"] = r.reference ? ordered_json(*r.reference) : ordered_json(nullptr);
    row["tolerance"] = r.tolerance ? ordered_json(*r.tolerance) : ordered_json(nullptr);
    row["pass"] = r.pass ? ordered_json(*r.pass) : ordered_json(nullptr);
    row["criterion"] = r.criterion ? ordered_json(r.criterion) : ordered_json(nullptr);
    row["note"] = r.note;
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  j["warnings"] = t.warnings;
  ordered_json plots = ordered_json::array();
  for (const auto& p : t.plots) plots.push_back({{"name", p.name}, {"columns", p.columns}, {"rows", p.rows}});
  j["plots"] = std::move(plots);
  return j.dump(2) + "\n";
}

void emit_json(const ResultTable& table, const std::string& path) { write_file(path, to_json(table)); }

std::string to_dat(const PlotData& plot) {
  std::ostringstream out;
  out << "#";
  for (const auto& c : plot.columns) out << ' ' << c;
  out << '\n';
  for (const auto& row : plot.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? " " : "") << format_number(row[k]);
    out << '\n';
  }
  return out.str();
}

std::vector<std::string> write_outputs(const ResultTable& table, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  std::vector<std::string> written;
  auto put = [&](const std::string& name, const std::string& content) {
    const auto path = (base / name).string();
    write_file(path, content);
    written.push_back(path);
  };
  put(table.experiment + ".csv", to_csv(table));
  put(table.experiment + ".json", to_json(table));
  for (const auto& p : table.plots) put(table.experiment + "_" + p.name + ".dat", to_dat(p));
  for (const auto& a : table.attachments) put(table.experiment + "_" + a.name, a.content);
  return written;
}

}  // namespace arbor
