#pragma once

#include "arbor/chain_stats.hpp"
#include "arbor/graph.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace arbor {

/// Determinant of the pin-reduced weighted Laplacian, with its logarithm.
struct ReducedDeterminant {
  double value = 0.0;
  double log_value = 0.0;
};

/// Largest vertex count handled by the dense Cholesky factorization.
inline constexpr std::size_t kMaxDenseHoroVertices = 2000;

/// Reduced Laplacian with edge weights beta_ij e^{t_i + t_j}, row and column
/// of `pin` removed. By the matrix-tree theorem its determinant is
/// sum_T prod_{ij in T} beta_ij e^{t_i + t_j}. `t` holds all n coordinates.
ReducedDeterminant reduced_det(const WeightedGraph& g, const std::vector<double>& t, VertexId pin = 0);

/// Energy value and (optionally) gradient over the free coordinates.
struct HoroEvaluation {
  double energy = 0.0;
  double log_det = 0.0;
  Eigen::VectorXd gradient;
};

/// The t-field density e^{-H(t)} with t_pin = 0, where
///   H(t) = sum_{ij} beta_ij (cosh(t_i - t_j) - 1) - a log D(t) + 2a sum_{i != pin} t_i
/// and D(t) is the reduced determinant above. With a = 3/2 its integral over
/// the free coordinates is (2 pi)^{(n-1)/2} Z_beta and <e^{t_j}> = P[pin <-> j].
class HoroDensity {
 public:
  HoroDensity(const WeightedGraph& g, VertexId pin = 0, double a = 1.5);

  /// The vertex-field form: a ghost vertex joined to every vertex i with
  /// weight h_i becomes the pin, so the energy gains sum_i h_i (cosh t_i - 1)
  /// and the determinant picks up h_i e^{t_i} on the diagonal. Then
  /// <e^{t_j}> = <z_j>_{beta,h}. Vertex ids of g are kept.
  static HoroDensity with_field(const WeightedGraph& g, const std::vector<double>& h, double a = 1.5);

  const WeightedGraph& graph() const { return g_; }
  VertexId pin() const { return pin_; }
  double exponent() const { return a_; }
  bool has_field() const { return field_; }
  /// Number of free coordinates, n - 1.
  std::size_t dim() const { return free_.size(); }
  /// Vertex of free coordinate k.
  VertexId vertex_of(std::size_t k) const { return free_[k]; }
  /// Free coordinate of vertex v, or -1 for the pin.
  int coordinate_of(VertexId v) const { return coord_[v]; }

  /// The density multiplied by e^{s t_v}: the energy gains -s t_v. Tilts
  /// accumulate; v must not be the pin.
  HoroDensity tilted(VertexId v, double s) const;
  /// Linear tilt per free coordinate (zero unless `tilted` was used).
  const std::vector<double>& tilt() const { return tilt_; }

  /// Expands free coordinates to a full field with t_pin = 0.
  std::vector<double> full_field(const Eigen::VectorXd& x) const;

  double energy(const Eigen::VectorXd& x) const { return evaluate(x, false).energy; }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const { return evaluate(x, true).gradient; }
  HoroEvaluation evaluate(const Eigen::VectorXd& x, bool with_gradient) const;

  /// Conditional moments E[e^{p t_j} | t_k, k != j] for each (vertex, power)
  /// request, sharing one factorization. The determinant's dependence on t_j
  /// is a rank-deg(j) update, so each request costs one small eigenproblem
  /// plus a one-dimensional trapezoid sum. Requests at the pin give 1.
  std::vector<double> conditional_moments(const Eigen::VectorXd& x,
                                          const std::vector<std::pair<VertexId, int>>& requests) const;

 private:
  WeightedGraph g_;
  VertexId pin_ = 0;
  double a_ = 1.5;
  bool field_ = false;
  std::vector<VertexId> free_;
  std::vector<int> coord_;
  std::vector<double> tilt_;
};

/// The pinned energy on g at the full field t (t[pin] must be 0).
double htilde0(const WeightedGraph& g, const std::vector<double>& t, VertexId pin = 0, double a = 1.5);
/// Its gradient over the non-pin coordinates, in vertex order.
std::vector<double> grad_htilde0(const WeightedGraph& g, const std::vector<double>& t, VertexId pin = 0,
                                 double a = 1.5);

struct MalaParams {
  /// Total steps including burn-in.
  std::uint64_t steps = 100000;
  std::uint64_t burn_in = 10000;
  std::uint64_t seed = 1;
  std::uint64_t chains = 1;
  /// Initial step size; tuned during burn-in when `tune` is set.
  double step = 0.5;
  bool tune = true;
  /// Also adapt a constant covariance metric during burn-in (needs tune).
  bool precondition = true;
  std::optional<std::string> trace_path;

  void validate() const;
};

/// Observables: exp1:j, exp2:j, exp3:j (e^{k t_j}); rb1:j, rb2:j, rb3:j (the
/// same functionals through their conditional expectation given the other
/// coordinates, a lower-variance estimator of the same mean); t:j (the
/// coordinate itself); tree_size (sum_j e^{t_j}, pin included) and
/// rb_tree_size (its conditional version). Chains start at t = 0.
ChainStats mala_chain(const HoroDensity& density, const std::vector<std::string>& observables,
                      const MalaParams& params);

/// <e^{p t_j}> by thermodynamic integration: log <e^{p t_j}> is the integral
/// over s in [0, p] of the mean of t_j under the density tilted by e^{s t_j},
/// evaluated with Gauss-Legendre nodes, one MALA run per node. Unlike the
/// direct average of e^{p t_j}, each node average has light tails.
struct IntegratedMoment {
  VertexId vertex = 0;
  double power = 0.0;
  double log_mean = 0.0;
  double log_stderr = 0.0;
  /// exp(log_mean) and its delta-method error.
  double mean = 1.0;
  double stderr_mean = 0.0;
  std::vector<double> nodes;
  std::vector<ObservableSummary> node_means;
  std::vector<std::string> warnings;
};

inline constexpr int kIntegrationNodes = 8;

/// Each node runs `params` with its own seed stream derived from params.seed,
/// the vertex and the node index.
IntegratedMoment integrated_moment(const HoroDensity& density, VertexId j, double power, const MalaParams& params);

/// MALA estimate of <e^{t_j}> = P[pin <-> j]; exactly 1 for j = pin.
ObservableSummary estimate_connection_horo(const WeightedGraph& g, VertexId pin, VertexId j, const MalaParams& params);

/// Mermin-Wagner check on a torus with uniform vertex field h > 0.
struct MwReport {
  double z0 = 0.0;
  /// Monte Carlo error of z0 (zero on the exact route).
  double z0_stderr = 0.0;
  double lhs = 0.0;
  /// 1 + (2 pi L)^{-d} sum_p 1/(lambda(p) + h).
  double rhs = 0.0;
  /// 1 + L^{-d} sum_p 1/(lambda(p) + h).
  double rhs_conventional = 0.0;
  bool holds = false;
  bool holds_conventional = false;
  bool exact = true;
};

struct MwOptions {
  /// Exact enumeration when the torus is small enough; otherwise MALA on the
  /// vertex-field density with these parameters.
  bool force_mala = false;
  MalaParams mala;
};

MwReport mw_bound(const WeightedGraph& torus, double h, const MwOptions& opts = {});

/// The two momentum sums alone: ((2 pi L)^{-d} normalization, L^{-d} normalization).
std::pair<double, double> mw_rhs(const WeightedGraph& torus, double h);

/// Z(beta + delta e_k) - Z(beta) for every edge k, exactly.
std::vector<Rational> partition_increments(const RationalGraph& g, const Rational& delta);

}  // namespace arbor
