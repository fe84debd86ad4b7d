#include "arbor/exact.hpp"

#include "json.hpp"

#include <ostream>

namespace arbor {

namespace {

nlohmann::json value(double x) { return x; }
nlohmann::json value(const Rational& x) { return x.str(); }

}  // namespace

template <Scalar S>
std::string exact_summary_json(const ExactSummary<S>& s) {
  nlohmann::json j;
  j["partition"] = value(s.partition);
  j["n_forests"] = s.n_forests;
  auto conn = nlohmann::json::array();
  for (std::size_t r = 0; r < s.connection.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (std::size_t c = 0; c < s.connection.cols(); ++c) row.push_back(value(s.connection(r, c)));
    conn.push_back(std::move(row));
  }
  j["connection"] = std::move(conn);
  j["edge_marginals"] = nlohmann::json::array();
  for (const auto& x : s.edge_marginals) j["edge_marginals"].push_back(value(x));
  j["tree_size_mean"] = nlohmann::json::array();
  for (const auto& x : s.tree_size_mean) j["tree_size_mean"].push_back(value(x));
  return j.dump(2);
}

template <Scalar S>
void write_matrix_csv(std::ostream& out, const DenseMatrix<S>& m) {
  out << "row,col,value\n";
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out << r << ',' << c << ',' << to_string(m(r, c)) << '\n';
}

template std::string exact_summary_json(const ExactSummary<double>&);
template std::string exact_summary_json(const ExactSummary<Rational>&);
template void write_matrix_csv(std::ostream&, const DenseMatrix<double>&);
template void write_matrix_csv(std::ostream&, const DenseMatrix<Rational>&);

}  // namespace arbor
