#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace arbor {

/// Streaming mean/variance (Welford) plus batch means of a fixed batch size.
/// The batch size is chosen up front from the expected sample count so that
/// at least `min_batches` full batches form.
class BatchMeans {
 public:
  explicit BatchMeans(std::uint64_t expected_samples = 0, std::uint64_t min_batches = 64);

  void add(double x);
  /// Associative combination; both sides must share the batch size.
  void merge(const BatchMeans& o);

  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  /// Sample variance of individual observations.
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  std::uint64_t batch_size() const { return batch_size_; }
  std::size_t n_batches() const { return batches_.size(); }
  /// Standard error of the mean from the spread of batch means.
  double stderr_mean() const;
  /// tau_int = b * Var(batch mean) / (2 * Var(x)); 1/2 for independent samples.
  double tau_int() const;

 private:
  std::uint64_t batch_size_ = 1;
  std::uint64_t n_ = 0;
  double mean_ = 0.0, m2_ = 0.0;
  double current_sum_ = 0.0;
  std::uint64_t current_n_ = 0;
  std::vector<double> batches_;
};

struct ObservableSummary {
  std::string name;
  double mean = 0.0;
  double stderr_mean = 0.0;
  double tau_int = 0.0;
  std::uint64_t samples = 0;
};

/// Monte Carlo estimate bundle for one run (possibly an ensemble of chains).
struct ChainStats {
  std::vector<std::string> names;
  std::vector<BatchMeans> acc;
  std::uint64_t seed = 0;
  std::uint64_t sweeps = 0;
  std::uint64_t burn_in = 0;
  std::uint64_t chains = 1;
  /// MALA only: acceptance rate after burn-in and the frozen step size.
  std::optional<double> acceptance_rate;
  std::optional<double> step_size;
  /// Diagnostics such as an out-of-band MALA acceptance rate.
  std::vector<std::string> warnings;

  ObservableSummary summary(std::size_t k) const;
  ObservableSummary summary(const std::string& name) const;
  std::vector<ObservableSummary> summaries() const;
  /// Associative merge of an independent chain over the same observables.
  void merge(const ChainStats& o);
};

/// CSV with header observable,mean,stderr,tau_int,sweeps,seed; MALA runs
/// add acceptance_rate,step_size columns.
void write_chain_csv(std::ostream& out, const ChainStats& s);

}  // namespace arbor
