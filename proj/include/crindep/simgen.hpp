// Parametric discrete lifetime laws and the power-family of sub-distributions
//
//   F_j(t) = pi_j F^a(t),  j < k,      F_k(t) = F(t) - sum_{j<k} pi_j F^a(t),
//
// which has T and C independent exactly when a = 1.

#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "crindep/core_model.hpp"
#include "crindep/rng.hpp"
#include "crindep/ustat_engine.hpp"

namespace crindep {

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class LifetimeModel {
 public:
  enum class Kind { geometric, discrete_weibull, explicit_pmf };

  /// F(t) = 1 - (1-p)^t, 0 < p < 1.
  static LifetimeModel geometric(double p);
  /// F(t) = 1 - ((1-p)^t)^beta, 0 < p < 1, beta > 0.
  static LifetimeModel discrete_weibull(double p, double beta);
  /// pmf[i] = P(T = i + 1); non-negative, summing to 1.
  static LifetimeModel explicit_pmf(std::vector<double> pmf);

  Kind kind() const noexcept { return kind_; }
  double p() const noexcept { return p_; }
  double beta() const noexcept { return beta_; }
  std::string name() const;
  std::string label() const;

  double survival(Time t) const;
  double cdf(Time t) const { return 1.0 - survival(t); }
  double pmf(Time t) const { return t < 1 ? 0.0 : survival(t - 1) - survival(t); }

  /// Smallest T with S(T) <= tail; throws ModelError when that exceeds
  /// max_support.
  Time truncation_point(double tail, Time max_support = 10'000'000) const;

  /// min{s >= 1 : F(s) >= u} for u in (0, 1).
  Time quantile(double u) const;
  Time sample(Rng& rng) const { return quantile(rng.uniform()); }

  /// Last time point held in the survival table.
  Time tabulated_support() const noexcept {
    return static_cast<Time>(survival_.size()) - 1;
  }

 private:
  LifetimeModel(Kind kind, double p, double beta, std::vector<double> pmf);

  Kind kind_;
  double p_ = 0.0;
  double beta_ = 1.0;
  double log_survival_step_ = 0.0;  // beta * log(1-p)
  // survival_[t] = S(t) for t = 0..size-1, tabulated down to ~1e-17
  std::vector<double> survival_;
  bool table_complete_ = false;
};

double model_cdf(const LifetimeModel& model, Time t);
double model_pmf(const LifetimeModel& model, Time t);
Time sample_lifetime(const LifetimeModel& model, Rng& rng);

class DependentFamily {
 public:
  /// pi holds (pi_1, ..., pi_{k-1}); k = pi.size() + 1. Rejects any
  /// combination that makes f_k negative on the tabulated support.
  DependentFamily(LifetimeModel base, double a, std::vector<double> pi);

  const LifetimeModel& base() const noexcept { return base_; }
  double a() const noexcept { return a_; }
  int k() const noexcept { return static_cast<int>(pi_.size()) + 1; }
  std::span<const double> pi() const noexcept { return pi_; }
  /// (pi_1, ..., pi_k) with pi_k = 1 - sum of the others.
  std::vector<double> proportions() const;

  double cdf(Time t) const { return base_.cdf(t); }
  double pmf(Time t) const { return base_.pmf(t); }
  double survival(Time t) const { return base_.survival(t); }
  double subdist(Cause j, Time t) const;
  double sub_density(Cause j, Time t) const;

  /// Cause given T = t, drawn with probability f_j(t) / f(t).
  Cause sample_cause(Time t, Rng& rng) const;

 private:
  double powered_cdf(Time t) const;
  double powered_step(Time t) const;  // F^a(t) - F^a(t-1)
  void conditional_cumulative(Time t, std::span<double> out) const;

  LifetimeModel base_;
  double a_;
  std::vector<double> pi_;
  // row t-1 holds sum_{i<=j} f_i(t) / f(t) for j = 1..k-1
  std::vector<double> cause_table_;
  Time table_len_ = 0;
};

double family_subdensity(const DependentFamily& family, Cause j, Time t);

Sample sample_competing_risks(const DependentFamily& family, std::size_t n,
                              Rng& rng);

/// Fills times/causes in place (sizes must match); allocation-free.
void sample_competing_risks_into(const DependentFamily& family, Rng& rng,
                                 std::span<Time> times, std::span<Cause> causes);

/// Delta = sum_j (1/pi_j) sum_t F_j^2 f - sum_t F^2 f by truncated summation,
/// tail mass below `tail` (required < 1e-10).
double true_delta(const DependentFamily& family, double tail = 1e-12);

}  // namespace crindep
