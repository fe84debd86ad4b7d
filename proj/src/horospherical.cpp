#include "arbor/horospherical.hpp"

#include "arbor/exact.hpp"
#include "arbor/forest_sampler.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace arbor {

namespace {

void require_connected(const WeightedGraph& g, const char* who) {
  if (!g.is_connected()) throw std::invalid_argument(std::string(who) + ": graph is disconnected");
  if (g.n_vertices() > kMaxDenseHoroVertices)
    throw std::length_error(std::string(who) + ": more than " + std::to_string(kMaxDenseHoroVertices) +
                            " vertices (dense factorization limit)");
}

/// Reduced Laplacian with weights beta e^{t_i+t_j}; coord maps vertices to rows.
Eigen::MatrixXd reduced_matrix(const WeightedGraph& g, const std::vector<double>& t, const std::vector<int>& coord,
                               std::size_t dim) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (const auto& e : g.edges()) {
    if (e.beta == 0) continue;
    const double w = e.beta * std::exp(t[e.i] + t[e.j]);
    const int a = coord[e.i], b = coord[e.j];
    if (a >= 0) M(a, a) += w;
    if (b >= 0) M(b, b) += w;
    if (a >= 0 && b >= 0) {
      M(a, b) -= w;
      M(b, a) -= w;
    }
  }
  return M;
}

[[noreturn]] void singular(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  std::ostringstream msg;
  msg << "reduced Laplacian is numerically singular (eigenvalues in [" << ev.minCoeff() << ", " << ev.maxCoeff()
      << "], condition estimate " << (ev.minCoeff() > 0 ? ev.maxCoeff() / ev.minCoeff() : INFINITY) << ")";
  throw std::runtime_error(msg.str());
}

std::vector<int> coordinates(std::size_t n, VertexId pin) {
  std::vector<int> coord(n, -1);
  int k = 0;
  for (std::size_t v = 0; v < n; ++v)
    if (v != pin) coord[v] = k++;
  return coord;
}

/// Standard normal from two uniforms (Box-Muller); platform independent.
struct NormalSource {
  Rng& rng;
  bool have_spare = false;
  double spare = 0.0;
  double operator()() {
    if (have_spare) {
      have_spare = false;
      return spare;
    }
    double u1 = 1.0 - uniform01(rng), u2 = uniform01(rng);
    double r = std::sqrt(-2.0 * std::log(u1)), th = 2.0 * std::numbers::pi * u2;
    spare = r * std::sin(th);
    have_spare = true;
    return r * std::cos(th);
  }
};

}  // namespace

ReducedDeterminant reduced_det(const WeightedGraph& g, const std::vector<double>& t, VertexId pin) {
  require_connected(g, "reduced_det");
  if (t.size() != g.n_vertices()) throw std::invalid_argument("reduced_det: field size does not match graph");
  if (pin >= g.n_vertices()) throw std::out_of_range("reduced_det: pin out of range");
  if (g.n_vertices() == 1) return {1.0, 0.0};
  auto coord = coordinates(g.n_vertices(), pin);
  auto M = reduced_matrix(g, t, coord, g.n_vertices() - 1);
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) singular(M);
  double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return {std::exp(log_det), log_det};
}

HoroDensity::HoroDensity(const WeightedGraph& g, VertexId pin, double a) : g_(g), pin_(pin), a_(a) {
  require_connected(g_, "HoroDensity");
  if (pin >= g_.n_vertices()) throw std::out_of_range("HoroDensity: pin out of range");
  if (!(a > 0)) throw std::invalid_argument("HoroDensity: exponent a must be positive");
  coord_ = coordinates(g_.n_vertices(), pin);
  for (std::size_t v = 0; v < g_.n_vertices(); ++v)
    if (v != pin) free_.push_back(static_cast<VertexId>(v));
  tilt_.assign(free_.size(), 0.0);
}

HoroDensity HoroDensity::tilted(VertexId v, double s) const {
  if (v >= g_.n_vertices()) throw std::out_of_range("HoroDensity::tilted: vertex out of range");
  if (v == pin_) throw std::invalid_argument("HoroDensity::tilted: cannot tilt the pinned coordinate");
  HoroDensity d = *this;
  d.tilt_[static_cast<std::size_t>(coord_[v])] += s;
  return d;
}

HoroDensity HoroDensity::with_field(const WeightedGraph& g, const std::vector<double>& h, double a) {
  if (h.size() != g.n_vertices()) throw std::invalid_argument("HoroDensity::with_field: field size mismatch");
  const auto ghost = static_cast<VertexId>(g.n_vertices());
  auto edges = g.edges();
  bool any = false;
  for (std::size_t v = 0; v < h.size(); ++v) {
    if (h[v] < 0) throw std::invalid_argument("HoroDensity::with_field: negative field");
    if (h[v] > 0) {
      edges.push_back({static_cast<VertexId>(v), ghost, h[v], 1});
      any = true;
    }
  }
  if (!any) throw std::invalid_argument("HoroDensity::with_field: field must be positive somewhere");
  HoroDensity d(WeightedGraph(g.n_vertices() + 1, std::move(edges)), ghost, a);
  d.field_ = true;
  return d;
}

std::vector<double> HoroDensity::full_field(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != dim()) throw std::invalid_argument("HoroDensity: state size mismatch");
  std::vector<double> t(g_.n_vertices(), 0.0);
  for (std::size_t k = 0; k < free_.size(); ++k) t[free_[k]] = x[static_cast<Eigen::Index>(k)];
  return t;
}

HoroEvaluation HoroDensity::evaluate(const Eigen::VectorXd& x, bool with_gradient) const {
  const auto t = full_field(x);
  HoroEvaluation out;
  double cosh_part = 0.0;
  for (const auto& e : g_.edges()) cosh_part += e.beta * (std::cosh(t[e.i] - t[e.j]) - 1.0);
  double linear = 2.0 * a_ * x.sum();
  for (std::size_t k = 0; k < tilt_.size(); ++k) linear -= tilt_[k] * x[static_cast<Eigen::Index>(k)];
  if (dim() == 0) {
    out.energy = 0.0;
    out.gradient = Eigen::VectorXd();
    return out;
  }
  auto M = reduced_matrix(g_, t, coord_, dim());
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) singular(M);
  out.log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  out.energy = cosh_part - a_ * out.log_det + linear;
  if (!with_gradient) return out;

  // d log D / d t_k = tr(M^{-1} dM/dt_k) = sum over edges e at k of w_e R_e,
  // with R_e = b_e^T M^{-1} b_e = |L^{-1} b_e|^2 the effective resistance in
  // metric M (M = L L^T, b_e the edge vector with the pin row dropped).
  // Column c of L^{-1} vanishes above row c, so each solve uses the trailing block.
  const Eigen::Index n = M.rows();
  const Eigen::MatrixXd& Lfac = llt.matrixLLT();
  Eigen::MatrixXd Linv = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    auto col = Linv.col(c).tail(n - c);
    col[0] = 1.0;
    Lfac.bottomRightCorner(n - c, n - c).triangularView<Eigen::Lower>().solveInPlace(col);
  }
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(x.size(), 2.0 * a_);
  for (std::size_t k = 0; k < tilt_.size(); ++k) grad[static_cast<Eigen::Index>(k)] -= tilt_[k];
  for (const auto& e : g_.edges()) {
    if (e.beta == 0) continue;
    const int a = coord_[e.i], b = coord_[e.j];
    const double w = e.beta * std::exp(t[e.i] + t[e.j]);
    double R;
    if (a >= 0 && b >= 0)
      R = (Linv.col(a) - Linv.col(b)).squaredNorm();
    else
      R = Linv.col(a >= 0 ? a : b).squaredNorm();
    const double s = e.beta * std::sinh(t[e.i] - t[e.j]);
    const double logdet_term = a_ * w * R;
    if (a >= 0) grad[a] += s - logdet_term;
    if (b >= 0) grad[b] += -s - logdet_term;
  }
  out.gradient = std::move(grad);
  return out;
}

std::vector<double> HoroDensity::conditional_moments(const Eigen::VectorXd& x,
                                                     const std::vector<std::pair<VertexId, int>>& requests) const {
  const auto t = full_field(x);
  std::vector<double> out(requests.size(), 1.0);
  if (dim() == 0) return out;
  auto M = reduced_matrix(g_, t, coord_, dim());
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) singular(M);
  const Eigen::MatrixXd G = llt.solve(Eigen::MatrixXd::Identity(M.rows(), M.cols()));
  auto green = [&](int a, int b) { return a >= 0 && b >= 0 ? G(a, b) : 0.0; };

  std::vector<VertexId> nbr;
  std::vector<double> beta, w, lambda, grid_logw, scratch;
  for (std::size_t r = 0; r < requests.size(); ++r) {
    const auto [j, power] = requests[r];
    if (j >= g_.n_vertices()) throw std::out_of_range("conditional_moments: vertex out of range");
    if (j == pin_) continue;
    const int c = coord_[j];
    nbr.clear();
    beta.clear();
    w.clear();
    for (auto k : g_.incident(j)) {
      const auto& e = g_.edge(k);
      if (e.beta == 0) continue;
      const VertexId o = e.i == j ? e.j : e.i;
      nbr.push_back(o);
      beta.push_back(e.beta);
      w.push_back(e.beta * std::exp(t[j] + t[o]));
    }
    const auto deg = static_cast<Eigen::Index>(nbr.size());
    // D(u) / D(t_j) = det(I + y W^{1/2} K W^{1/2}) with y = e^{u - t_j} - 1 and
    // K_ef = b_e^T M^{-1} b_f for the edge vectors b_e = e_j - e_k.
    Eigen::MatrixXd S(deg, deg);
    for (Eigen::Index e = 0; e < deg; ++e)
      for (Eigen::Index f = 0; f < deg; ++f) {
        const int ke = coord_[nbr[e]], kf = coord_[nbr[f]];
        const double K = G(c, c) - green(c, kf) - green(ke, c) + green(ke, kf);
        S(e, f) = std::sqrt(w[e] * w[f]) * K;
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    lambda.assign(es.eigenvalues().data(), es.eigenvalues().data() + deg);

    double lo = t[j], hi = t[j], beta_min = beta[0];
    for (Eigen::Index e = 0; e < deg; ++e) {
      lo = std::min(lo, t[nbr[e]]);
      hi = std::max(hi, t[nbr[e]]);
      beta_min = std::min(beta_min, beta[e]);
    }
    // Beyond distance R of every neighbour the cosh terms alone suppress the
    // density by more than e^{-100} relative to its bulk.
    const double R = std::acosh(1.0 + 100.0 / beta_min) + 0.5;
    lo -= R;
    hi += R;
    // The conditional density is smooth with width of order 1/sqrt(sum beta),
    // so the trapezoid rule on this spacing is accurate to far below 1e-12.
    double beta_sum = 0.0;
    for (double b : beta) beta_sum += b;
    const double h = std::min(0.2, 0.4 / std::sqrt(beta_sum));
    const auto n_grid = static_cast<std::size_t>(std::ceil((hi - lo) / h)) + 1;
    grid_logw.resize(n_grid);
    // Incremental exponentials: e^{u} advances by a factor e^{h} per node and
    // cosh(u - t_k) = (e^{u} e^{-t_k} + e^{-u} e^{t_k}) / 2.
    std::vector<double> ek(static_cast<std::size_t>(deg)), emk(static_cast<std::size_t>(deg));
    for (Eigen::Index e = 0; e < deg; ++e) {
      ek[e] = std::exp(t[nbr[e]]);
      emk[e] = 1.0 / ek[e];
    }
    const double step_up = std::exp(h), emtj = std::exp(-t[j]);
    double eu = std::exp(lo), peak = -INFINITY;
    std::vector<double>& eu_grid = scratch;
    eu_grid.resize(n_grid);
    for (std::size_t q = 0; q < n_grid; ++q, eu *= step_up) {
      const double u = lo + h * static_cast<double>(q);
      const double emu = 1.0 / eu;
      double lw = (tilt_[static_cast<std::size_t>(c)] - 2.0 * a_) * u;
      for (Eigen::Index e = 0; e < deg; ++e) lw -= beta[e] * (0.5 * (eu * emk[e] + emu * ek[e]) - 1.0);
      const double y = eu * emtj - 1.0;
      double prod = 1.0;
      for (double l : lambda) prod *= 1.0 + y * l;
      lw += prod > 0 ? a_ * std::log(prod) : -INFINITY;
      grid_logw[q] = lw;
      eu_grid[q] = eu;
      peak = std::max(peak, lw);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t q = 0; q < n_grid; ++q) {
      const double wq = std::exp(grid_logw[q] - peak);
      den += wq;
      num += wq * std::pow(eu_grid[q], power);
    }
    out[r] = num / den;
  }
  return out;
}

double htilde0(const WeightedGraph& g, const std::vector<double>& t, VertexId pin, double a) {
  HoroDensity d(g, pin, a);
  if (t.size() != g.n_vertices()) throw std::invalid_argument("htilde0: field size does not match graph");
  if (t[pin] != 0.0) throw std::invalid_argument("htilde0: field must vanish at the pin");
  Eigen::VectorXd x(static_cast<Eigen::Index>(d.dim()));
  for (std::size_t k = 0; k < d.dim(); ++k) x[static_cast<Eigen::Index>(k)] = t[d.vertex_of(k)];
  return d.energy(x);
}

std::vector<double> grad_htilde0(const WeightedGraph& g, const std::vector<double>& t, VertexId pin, double a) {
  HoroDensity d(g, pin, a);
  if (t.size() != g.n_vertices()) throw std::invalid_argument("grad_htilde0: field size does not match graph");
  if (t[pin] != 0.0) throw std::invalid_argument("grad_htilde0: field must vanish at the pin");
  Eigen::VectorXd x(static_cast<Eigen::Index>(d.dim()));
  for (std::size_t k = 0; k < d.dim(); ++k) x[static_cast<Eigen::Index>(k)] = t[d.vertex_of(k)];
  auto gr = d.gradient(x);
  return std::vector<double>(gr.data(), gr.data() + gr.size());
}

void MalaParams::validate() const {
  if (steps <= burn_in) throw std::invalid_argument("mala: steps must exceed burn_in");
  if (!(step > 0)) throw std::invalid_argument("mala: step must be positive");
  if (chains == 0) throw std::invalid_argument("mala: chains must be positive");
}

namespace {

struct HoroObservable {
  enum class Kind { TreeSize, ConditionalTreeSize, Exp, Conditional, Coordinate } kind = Kind::TreeSize;
  int power = 0;
  VertexId vertex = 0;
};

std::vector<HoroObservable> parse_horo_observables(const HoroDensity& d, const std::vector<std::string>& names) {
  using K = HoroObservable::Kind;
  std::vector<HoroObservable> out;
  for (const auto& name : names) {
    if (name == "tree_size" || name == "rb_tree_size") {
      out.push_back({name == "tree_size" ? K::TreeSize : K::ConditionalTreeSize, 1, 0});
      continue;
    }
    auto colon = name.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("unknown observable '" + name + "'");
    const std::string head = name.substr(0, colon), arg = name.substr(colon + 1);
    HoroObservable o;
    if (head == "t") {
      o.kind = K::Coordinate;
    } else if ((head.size() == 4 && head.starts_with("exp")) || (head.size() == 3 && head.starts_with("rb"))) {
      o.kind = head.starts_with("rb") ? K::Conditional : K::Exp;
      if (head.back() < '1' || head.back() > '3') throw std::invalid_argument("unknown observable '" + name + "'");
      o.power = head.back() - '0';
    } else {
      throw std::invalid_argument("unknown observable '" + name + "'");
    }
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != arg.size()) throw std::invalid_argument("observable " + name + ": bad vertex");
    if (v >= d.graph().n_vertices()) throw std::out_of_range("observable " + name + ": vertex out of range");
    o.vertex = static_cast<VertexId>(v);
    out.push_back(o);
  }
  return out;
}

ChainStats mala_single(const HoroDensity& d, const std::vector<std::string>& names,
                       const std::vector<HoroObservable>& obs, const MalaParams& p, std::uint64_t chain) {
  Rng rng = chain_rng(p.seed, chain);
  NormalSource normal{rng};
  const auto dim = static_cast<Eigen::Index>(d.dim());
  const std::uint64_t measured = p.steps - p.burn_in;

  ChainStats stats;
  stats.names = names;
  for (std::size_t k = 0; k < names.size(); ++k) stats.acc.emplace_back(measured);
  stats.seed = p.seed;
  stats.sweeps = p.steps;
  stats.burn_in = p.burn_in;

  std::ofstream trace;
  if (p.trace_path) {
    std::string path = p.chains == 1 ? *p.trace_path : *p.trace_path + ".chain" + std::to_string(chain);
    trace.open(path, std::ios::binary);
    if (!trace) throw std::runtime_error("cannot open trace file " + path);
  }

  // Burn-in adapts the step size and (optionally) a constant metric C, the
  // covariance of the second quarter of burn-in samples. Both are frozen
  // before measurement, so the measured chain is a fixed reversible kernel.
  // Proposal: y = x - (eps^2/2) C grad H(x) + eps L xi, with C = L L^T.
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
  HoroEvaluation cur = d.evaluate(x, true);
  Eigen::MatrixXd Lc = Eigen::MatrixXd::Identity(dim, dim);
  Eigen::VectorXd cur_drift = cur.gradient;  // C grad H(x)
  const bool adapt_metric = p.tune && p.precondition && dim > 0 && p.burn_in >= 400;
  const std::uint64_t collect_begin = p.burn_in / 4, metric_at = p.burn_in / 2;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(dim, dim);
  std::uint64_t collected = 0;

  // Robbins-Monro on log eps toward the target acceptance probability; the
  // frozen value is the average of log eps over the last half of each
  // adaptation segment.
  constexpr double kTarget = 0.55;
  double log_eps = std::log(p.step), log_eps_sum = 0.0;
  std::uint64_t segment_begin = 0, segment_end = adapt_metric ? metric_at : p.burn_in, averaged = 0;
  double eps = p.step;
  std::uint64_t accepts = 0;
  Eigen::VectorXd xi(dim), y(dim), back(dim), drift_y(dim);
  std::vector<double> values(obs.size());
  // Vertices of the physical graph (the ghost of a field density excluded).
  const std::size_t n_real = d.has_field() ? d.graph().n_vertices() - 1 : d.graph().n_vertices();
  using K = HoroObservable::Kind;
  std::vector<std::pair<VertexId, int>> rb_requests;
  std::vector<std::size_t> rb_index(obs.size());
  bool rb_tree = false;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    if (obs[k].kind == K::Conditional) {
      rb_index[k] = rb_requests.size();
      rb_requests.emplace_back(obs[k].vertex, obs[k].power);
    }
    rb_tree |= obs[k].kind == K::ConditionalTreeSize;
  }
  // rb_tree_size reuses (or appends) the first-moment requests of every vertex.
  std::vector<std::size_t> rb_tree_index(rb_tree ? n_real : 0);
  for (std::size_t v = 0; v < rb_tree_index.size(); ++v) {
    auto it = std::find(rb_requests.begin(), rb_requests.end(), std::pair<VertexId, int>{static_cast<VertexId>(v), 1});
    rb_tree_index[v] = static_cast<std::size_t>(it - rb_requests.begin());
    if (it == rb_requests.end()) rb_requests.emplace_back(static_cast<VertexId>(v), 1);
  }

  for (std::uint64_t s = 0; s < p.steps; ++s) {
    for (Eigen::Index k = 0; k < dim; ++k) xi[k] = normal();
    const double h2 = 0.5 * eps * eps;
    y.noalias() = Lc * xi;
    y = x - h2 * cur_drift + eps * y;
    bool accept = false;
    double accept_prob = 0.0;
    HoroEvaluation prop;
    const double u = uniform01(rng);
    if (dim > 0 && y.cwiseAbs().maxCoeff() <= 500.0) {
      prop = d.evaluate(y, true);
      drift_y.noalias() = Lc * (Lc.transpose() * prop.gradient);
      back = Lc.triangularView<Eigen::Lower>().solve(x - y + h2 * drift_y);
      const double log_ratio =
          cur.energy - prop.energy - back.squaredNorm() / (4.0 * h2) + 0.5 * xi.squaredNorm();
      accept_prob = log_ratio >= 0 ? 1.0 : std::exp(log_ratio);
      accept = u < accept_prob;
    }
    if (accept) {
      x = y;
      cur = std::move(prop);
      cur_drift = drift_y;
    }
    if (s < p.burn_in) {
      if (!p.tune) continue;
      const double k = static_cast<double>(s - segment_begin);
      log_eps += (accept_prob - kTarget) / std::pow(k + 10.0, 0.6);
      log_eps = std::clamp(log_eps, std::log(1e-4), std::log(1e2));
      eps = std::exp(log_eps);
      if (2 * (s - segment_begin) >= segment_end - segment_begin) {
        log_eps_sum += log_eps;
        ++averaged;
      }
      if (adapt_metric && s >= collect_begin && s < metric_at) {
        ++collected;
        const Eigen::VectorXd delta = x - mean;
        mean += delta / static_cast<double>(collected);
        m2 += delta * (x - mean).transpose();
      }
      if (s + 1 == segment_end) {
        if (averaged) eps = std::exp(log_eps_sum / static_cast<double>(averaged));
        log_eps = std::log(eps);
        log_eps_sum = 0.0;
        averaged = 0;
        if (adapt_metric && s + 1 == metric_at) {
          // Shrink toward a small multiple of the identity, as is customary.
          const double n = static_cast<double>(collected);
          Eigen::MatrixXd C = (n / (n + 5.0)) * (m2 / std::max(1.0, n - 1.0));
          C.diagonal().array() += 1e-3 * 5.0 / (n + 5.0);
          Eigen::LLT<Eigen::MatrixXd> llt(C);
          if (llt.info() == Eigen::Success) {
            Lc = llt.matrixL();
            cur_drift = C * cur.gradient;
            // The preconditioned scale differs; restart the step search near 1.
            eps = std::pow(static_cast<double>(dim), -1.0 / 6.0);
            log_eps = std::log(eps);
          }
          segment_begin = metric_at;
          segment_end = p.burn_in;
        }
      }
      continue;
    }
    accepts += accept;
    const auto t = d.full_field(x);
    std::vector<double> rb;
    if (!rb_requests.empty()) rb = d.conditional_moments(x, rb_requests);
    for (std::size_t k = 0; k < obs.size(); ++k) {
      double v = 0.0;
      switch (obs[k].kind) {
        case K::TreeSize:
          for (std::size_t j = 0; j < n_real; ++j) v += std::exp(t[j]);
          break;
        case K::ConditionalTreeSize:
          for (std::size_t idx : rb_tree_index) v += rb[idx];
          break;
        case K::Exp: v = std::exp(obs[k].power * t[obs[k].vertex]); break;
        case K::Conditional: v = rb[rb_index[k]]; break;
        case K::Coordinate: v = t[obs[k].vertex]; break;
      }
      values[k] = v;
      stats.acc[k].add(v);
    }
    if (trace.is_open()) detail::write_trace_values(trace, values);
  }
  const double rate = static_cast<double>(accepts) / static_cast<double>(measured);
  stats.acceptance_rate = rate;
  stats.step_size = eps;
  return stats;
}

}  // namespace

ChainStats mala_chain(const HoroDensity& density, const std::vector<std::string>& names, const MalaParams& params) {
  params.validate();
  auto obs = parse_horo_observables(density, names);
  std::vector<ChainStats> parts(params.chains);
  std::vector<std::exception_ptr> errors(params.chains);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(params.chains); ++k) {
    try {
      parts[k] = mala_single(density, names, obs, params, static_cast<std::uint64_t>(k));
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  ChainStats out = std::move(parts[0]);
  for (std::size_t k = 1; k < parts.size(); ++k) out.merge(parts[k]);
  const double rate = *out.acceptance_rate;
  if (rate < 0.05 || rate > 0.95) {
    std::ostringstream msg;
    msg << "MALA acceptance rate " << rate << " outside [0.05, 0.95]; try step "
        << *out.step_size * std::clamp(rate / 0.55, 0.1, 3.0);
    out.warnings.push_back(msg.str());
  }
  return out;
}

ObservableSummary estimate_connection_horo(const WeightedGraph& g, VertexId pin, VertexId j, const MalaParams& params) {
  if (j >= g.n_vertices() || pin >= g.n_vertices()) throw std::out_of_range("estimate_connection_horo: vertex out of range");
  std::string name = "exp1:" + std::to_string(j);
  if (j == pin) return {name, 1.0, 0.0, 0.5, params.steps - params.burn_in};
  HoroDensity d(g, pin);
  return mala_chain(d, {name}, params).summary(0);
}

IntegratedMoment integrated_moment(const HoroDensity& density, VertexId j, double power, const MalaParams& params) {
  params.validate();
  if (j >= density.graph().n_vertices()) throw std::out_of_range("integrated_moment: vertex out of range");
  IntegratedMoment out;
  out.vertex = j;
  out.power = power;
  if (j == density.pin()) return out;
  using Rule = boost::math::quadrature::gauss<double, kIntegrationNodes>;
  // The rule stores the non-negative abscissae of [-1, 1] with weights.
  std::vector<std::pair<double, double>> rule;
  for (std::size_t k = 0; k < Rule::abscissa().size(); ++k) {
    const double x = Rule::abscissa()[k], w = Rule::weights()[k];
    rule.emplace_back(-x, w);
    if (x != 0.0) rule.emplace_back(x, w);
  }
  std::sort(rule.begin(), rule.end());
  const std::string name = "t:" + std::to_string(j);
  double var = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const double s = 0.5 * power * (rule[k].first + 1.0);
    const double w = 0.5 * power * rule[k].second;
    MalaParams p = params;
    std::seed_seq seq{static_cast<std::uint32_t>(params.seed), static_cast<std::uint32_t>(params.seed >> 32),
                      static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(k)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    p.seed = (std::uint64_t{words[0]} << 32) | words[1];
    auto stats = mala_chain(density.tilted(j, s), {name}, p);
    auto m = stats.summary(0);
    out.log_mean += w * m.mean;
    var += w * w * m.stderr_mean * m.stderr_mean;
    out.nodes.push_back(s);
    out.node_means.push_back(m);
    for (auto& msg : stats.warnings) out.warnings.push_back("node s=" + std::to_string(s) + ": " + msg);
  }
  out.log_stderr = std::sqrt(var);
  out.mean = std::exp(out.log_mean);
  out.stderr_mean = out.mean * out.log_stderr;
  return out;
}

std::pair<double, double> mw_rhs(const WeightedGraph& torus, double h) {
  if (!torus.torus()) throw std::invalid_argument("mw_bound: not a torus");
  if (!(h > 0)) throw std::invalid_argument("mw_bound: h must be positive (the momentum sum diverges at h = 0)");
  const auto [L, d] = *torus.torus();
  double sum = 0.0;
  for (const auto& mode : torus_modes(L, d)) sum += 1.0 / (fourier_multiplier(torus, mode) + h);
  const double Ld = std::pow(static_cast<double>(L), d);
  const double two_pi_scaled = 1.0 + sum / std::pow(2.0 * std::numbers::pi * L, d);
  const double conventional = 1.0 + sum / Ld;
  return {two_pi_scaled, conventional};
}

MwReport mw_bound(const WeightedGraph& torus, double h, const MwOptions& opts) {
  auto [rhs, rhs_conv] = mw_rhs(torus, h);
  MwReport r;
  r.rhs = rhs;
  r.rhs_conventional = rhs_conv;
  const bool small = torus.n_edges() <= EnumerationOptions{}.max_edges;
  if (small && !opts.force_mala) {
    r.z0 = z0_expectation(torus, h, 0);
    r.exact = true;
  } else {
    auto d = HoroDensity::with_field(torus, std::vector<double>(torus.n_vertices(), h));
    auto s = mala_chain(d, {"exp1:0"}, opts.mala).summary(0);
    r.z0 = s.mean;
    r.z0_stderr = s.stderr_mean;
    r.exact = false;
  }
  r.lhs = 1.0 / r.z0;
  r.holds = r.lhs >= r.rhs;
  r.holds_conventional = r.lhs >= r.rhs_conventional;
  return r;
}

std::vector<Rational> partition_increments(const RationalGraph& g, const Rational& delta) {
  const Rational z0 = partition_function(g);
  std::vector<Rational> out;
  for (std::size_t k = 0; k < g.n_edges(); ++k) {
    auto edges = g.edges();
    edges[k].beta += delta;
    RationalGraph gk(g.n_vertices(), edges, g.vertex_weights(), g.torus());
    out.push_back(partition_function(gk) - z0);
  }
  return out;
}

}  // namespace arbor
