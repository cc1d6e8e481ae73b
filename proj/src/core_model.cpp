#include "crindep/core_model.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <ostream>
#include <system_error>

namespace crindep {

Sample::Sample(std::vector<Time> times, std::vector<Cause> causes, int k)
    : times_(std::move(times)), causes_(std::move(causes)), k_(k) {
  if (k_ < 2) {
    throw SampleError("k must be at least 2, got " + std::to_string(k_));
  }
  if (times_.empty()) throw SampleError("sample is empty");
  if (times_.size() != causes_.size()) {
    throw SampleError("length mismatch: " + std::to_string(times_.size()) +
                      " times vs " + std::to_string(causes_.size()) + " causes");
  }
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (times_[i] < 1) {
      throw SampleError("non-positive time at index " + std::to_string(i + 1));
    }
    const Cause c = causes_[i];
    if (c > k_) {
      throw SampleError("cause " + std::to_string(c) + " exceeds k=" +
                        std::to_string(k_) + " at index " +
                        std::to_string(i + 1));
    }
    if (c < 1) {
      throw SampleError("cause " + std::to_string(c) + " below 1 at index " +
                        std::to_string(i + 1));
    }
  }
}

std::vector<std::size_t> Sample::cause_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(k_), 0);
  for (Cause c : causes_) ++counts[static_cast<std::size_t>(c - 1)];
  return counts;
}

Sample validate_sample(std::vector<Time> times, std::vector<Cause> causes,
                       int k) {
  return Sample(std::move(times), std::move(causes), k);
}

EmpiricalLaw::EmpiricalLaw(const Sample& sample)
    : k_(sample.k()), n_(sample.n()) {
  std::vector<std::pair<Time, Cause>> obs(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    obs[i] = {sample.times()[i], sample.causes()[i]};
  }
  std::sort(obs.begin(), obs.end());

  const auto kk = static_cast<std::size_t>(k_);
  std::vector<std::size_t> running(kk, 0);
  std::size_t total = 0;
  std::vector<std::vector<std::size_t>> per_cause;  // [support idx][cause]
  for (std::size_t i = 0; i < n_;) {
    const Time t = obs[i].first;
    for (; i < n_ && obs[i].first == t; ++i) {
      ++running[static_cast<std::size_t>(obs[i].second - 1)];
      ++total;
    }
    support_.push_back(t);
    count_le_.push_back(total);
    per_cause.push_back(running);
  }

  const std::size_t m = support_.size();
  const auto nd = static_cast<double>(n_);
  cdf_.resize(m);
  subdist_.resize(kk * m);
  cause_count_le_.resize(kk * m);
  for (std::size_t i = 0; i < m; ++i) {
    cdf_[i] = static_cast<double>(count_le_[i]) / nd;
    for (std::size_t j = 0; j < kk; ++j) {
      cause_count_le_[j * m + i] = per_cause[i][j];
      subdist_[j * m + i] = static_cast<double>(per_cause[i][j]) / nd;
    }
  }
  proportions_.resize(kk);
  for (std::size_t j = 0; j < kk; ++j) {
    proportions_[j] = subdist_[j * m + (m - 1)];
  }
}

std::span<const double> EmpiricalLaw::subdist(Cause j) const {
  if (j < 1 || j > k_) throw std::out_of_range("cause outside 1..k");
  const std::size_t m = support_.size();
  return std::span<const double>(subdist_).subspan(
      static_cast<std::size_t>(j - 1) * m, m);
}

std::ptrdiff_t EmpiricalLaw::floor_index(Time t) const {
  const auto it = std::upper_bound(support_.begin(), support_.end(), t);
  return std::distance(support_.begin(), it) - 1;
}

std::ptrdiff_t EmpiricalLaw::exact_index(Time t) const {
  const auto it = std::lower_bound(support_.begin(), support_.end(), t);
  if (it == support_.end() || *it != t) return -1;
  return std::distance(support_.begin(), it);
}

double EmpiricalLaw::cdf(Time t) const {
  const auto i = floor_index(t);
  return i < 0 ? 0.0 : cdf_[static_cast<std::size_t>(i)];
}

double EmpiricalLaw::subdist(Cause j, Time t) const {
  const auto values = subdist(j);
  const auto i = floor_index(t);
  return i < 0 ? 0.0 : values[static_cast<std::size_t>(i)];
}

double EmpiricalLaw::pmf(Time t) const {
  const auto i = exact_index(t);
  if (i < 0) return 0.0;
  const auto u = static_cast<std::size_t>(i);
  const std::size_t below = u == 0 ? 0 : count_le_[u - 1];
  return static_cast<double>(count_le_[u] - below) / static_cast<double>(n_);
}

double EmpiricalLaw::sub_density(Cause j, Time t) const {
  if (j < 1 || j > k_) throw std::out_of_range("cause outside 1..k");
  const auto i = exact_index(t);
  if (i < 0) return 0.0;
  const std::size_t m = support_.size();
  const auto u = static_cast<std::size_t>(i);
  const std::size_t base = static_cast<std::size_t>(j - 1) * m;
  const std::size_t below = u == 0 ? 0 : cause_count_le_[base + u - 1];
  return static_cast<double>(cause_count_le_[base + u] - below) /
         static_cast<double>(n_);
}

EmpiricalLaw empirical_law(const Sample& sample) { return EmpiricalLaw(sample); }

CifTable cif_table(const Sample& sample) {
  const EmpiricalLaw law(sample);
  CifTable table;
  table.k = law.k();
  const auto support = law.support();
  table.rows.reserve(support.size());
  for (std::size_t i = 0; i < support.size(); ++i) {
    CifRow row{support[i], {}, law.overall_cdf()[i]};
    row.subdist.reserve(static_cast<std::size_t>(law.k()));
    for (Cause j = 1; j <= law.k(); ++j) row.subdist.push_back(law.subdist(j)[i]);
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  if (res.ec != std::errc{}) throw std::runtime_error("double formatting failed");
  return std::string(buf, res.ptr);
}

void write_cif_csv(std::ostream& out, const CifTable& table) {
  out << 't';
  for (int j = 1; j <= table.k; ++j) out << ",F" << j;
  out << ",F\n";
  for (const auto& row : table.rows) {
    out << row.t;
    for (double v : row.subdist) out << ',' << format_double(v);
    out << ',' << format_double(row.overall) << '\n';
  }
}

}  // namespace crindep
