#include "arbor/chain_stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace arbor {

BatchMeans::BatchMeans(std::uint64_t expected_samples, std::uint64_t min_batches)
    : batch_size_(std::max<std::uint64_t>(1, min_batches ? expected_samples / min_batches : 1)) {}

void BatchMeans::add(double x) {
  ++n_;
  double d = x - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (x - mean_);
  current_sum_ += x;
  if (++current_n_ == batch_size_) {
    batches_.push_back(current_sum_ / static_cast<double>(batch_size_));
    current_sum_ = 0.0;
    current_n_ = 0;
  }
}

void BatchMeans::merge(const BatchMeans& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  if (o.batch_size_ != batch_size_) throw std::invalid_argument("BatchMeans::merge: batch sizes differ");
  const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
  const double d = o.mean_ - mean_;
  mean_ += d * nb / (na + nb);
  m2_ += o.m2_ + d * d * na * nb / (na + nb);
  n_ += o.n_;
  batches_.insert(batches_.end(), o.batches_.begin(), o.batches_.end());
  // Partial batches from different chains are not contiguous; drop the
  // other side's remainder from the batch statistics (it stays in the mean).
}

double BatchMeans::stderr_mean() const {
  const std::size_t k = batches_.size();
  if (k < 2) return 0.0;
  double m = 0.0;
  for (double b : batches_) m += b;
  m /= static_cast<double>(k);
  double v = 0.0;
  for (double b : batches_) v += (b - m) * (b - m);
  v /= static_cast<double>(k - 1);
  return std::sqrt(v / static_cast<double>(k));
}

double BatchMeans::tau_int() const {
  const double var = variance();
  const std::size_t k = batches_.size();
  if (var <= 0.0 || k < 2) return 0.5;
  double se = stderr_mean();
  double var_batch = se * se * static_cast<double>(k);
  return static_cast<double>(batch_size_) * var_batch / (2.0 * var);
}

ObservableSummary ChainStats::summary(std::size_t k) const {
  const auto& a = acc.at(k);
  return {names.at(k), a.mean(), a.stderr_mean(), a.tau_int(), a.count()};
}

ObservableSummary ChainStats::summary(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("ChainStats: no observable named " + name);
  return summary(static_cast<std::size_t>(it - names.begin()));
}

std::vector<ObservableSummary> ChainStats::summaries() const {
  std::vector<ObservableSummary> out;
  for (std::size_t k = 0; k < names.size(); ++k) out.push_back(summary(k));
  return out;
}

void ChainStats::merge(const ChainStats& o) {
  if (o.names != names) throw std::invalid_argument("ChainStats::merge: observable lists differ");
  for (std::size_t k = 0; k < acc.size(); ++k) acc[k].merge(o.acc[k]);
  if (acceptance_rate && o.acceptance_rate)
    acceptance_rate = (*acceptance_rate * static_cast<double>(chains) + *o.acceptance_rate * static_cast<double>(o.chains)) /
                      static_cast<double>(chains + o.chains);
  chains += o.chains;
  warnings.insert(warnings.end(), o.warnings.begin(), o.warnings.end());
}

void write_chain_csv(std::ostream& out, const ChainStats& s) {
  const bool mala = s.acceptance_rate.has_value();
  out << "observable,mean,stderr,tau_int,sweeps,seed";
  if (mala) out << ",acceptance_rate,step_size";
  out << '\n';
  char buf[256];
  for (const auto& r : s.summaries()) {
    std::snprintf(buf, sizeof buf, "%s,%.10g,%.4g,%.4g,%llu,%llu", r.name.c_str(), r.mean, r.stderr_mean, r.tau_int,
                  static_cast<unsigned long long>(s.sweeps), static_cast<unsigned long long>(s.seed));
    out << buf;
    if (mala) {
      std::snprintf(buf, sizeof buf, ",%.4f,%.6g", *s.acceptance_rate, s.step_size.value_or(0.0));
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace arbor
