// Competing-risks samples and their empirical laws.
//
// A Sample holds n paired observations (T_i, C_i) with discrete lifetimes on
// {1, 2, ...} and cause labels on {1, ..., k}. EmpiricalLaw carries the
// step-function estimators built from it: the overall ECDF, the cause-specific
// sub-distributions (cumulative incidence functions) and cause proportions.

#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace crindep {

using Time = std::int64_t;
using Cause = int;

/// Raised when observations violate the sample invariants.
class SampleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Sample {
 public:
  /// Validates and takes ownership. Indices in error messages are 1-based.
  Sample(std::vector<Time> times, std::vector<Cause> causes, int k);

  std::span<const Time> times() const noexcept { return times_; }
  std::span<const Cause> causes() const noexcept { return causes_; }
  int k() const noexcept { return k_; }
  std::size_t n() const noexcept { return times_.size(); }

  /// Number of observations per cause, indexed 0..k-1 for causes 1..k.
  std::vector<std::size_t> cause_counts() const;

  friend bool operator==(const Sample&, const Sample&) = default;

 private:
  std::vector<Time> times_;
  std::vector<Cause> causes_;
  int k_;
};

Sample validate_sample(std::vector<Time> times, std::vector<Cause> causes,
                       int k);

/// Right-continuous step-function estimators on the observed support.
class EmpiricalLaw {
 public:
  explicit EmpiricalLaw(const Sample& sample);

  int k() const noexcept { return k_; }
  std::size_t n() const noexcept { return n_; }
  std::span<const Time> support() const noexcept { return support_; }
  std::span<const double> overall_cdf() const noexcept { return cdf_; }
  /// F_j at every support point, cause j in 1..k.
  std::span<const double> subdist(Cause j) const;
  std::span<const double> proportions() const noexcept { return proportions_; }

  /// Values at an arbitrary time: the value at the largest support point <= t.
  double cdf(Time t) const;
  double subdist(Cause j, Time t) const;
  double pmf(Time t) const;
  double sub_density(Cause j, Time t) const;
  double survival(Time t) const { return 1.0 - cdf(t); }

 private:
  std::ptrdiff_t floor_index(Time t) const;
  std::ptrdiff_t exact_index(Time t) const;

  int k_;
  std::size_t n_;
  std::vector<Time> support_;
  std::vector<double> cdf_;
  // cause-major: subdist_[(j-1) * support_.size() + i]
  std::vector<double> subdist_;
  std::vector<double> proportions_;
  // integer counts backing the estimators
  std::vector<std::size_t> count_le_;
  std::vector<std::size_t> cause_count_le_;
};

EmpiricalLaw empirical_law(const Sample& sample);

/// Any law exposing cause-specific sub-densities and a survival function.
template <typename L>
concept SubdistributionLaw = requires(const L& law, Cause j, Time t) {
  { law.k() } -> std::convertible_to<int>;
  { law.sub_density(j, t) } -> std::convertible_to<double>;
  { law.survival(t) } -> std::convertible_to<double>;
};

/// lambda_j(t) = f_j(t) / S(t-1). Throws std::domain_error when S(t-1) = 0.
template <SubdistributionLaw L>
double cause_specific_hazard(const L& law, Cause j, Time t) {
  if (j < 1 || j > law.k()) {
    throw std::out_of_range("cause " + std::to_string(j) + " outside 1.." +
                            std::to_string(law.k()));
  }
  const double at_risk = law.survival(t - 1);
  if (!(at_risk > 0.0)) {
    throw std::domain_error("hazard undefined beyond support");
  }
  return law.sub_density(j, t) / at_risk;
}

/// lambda(t) = sum_j lambda_j(t).
template <SubdistributionLaw L>
double overall_hazard(const L& law, Time t) {
  double total = 0.0;
  for (Cause j = 1; j <= law.k(); ++j) total += cause_specific_hazard(law, j, t);
  return total;
}

struct CifRow {
  Time t;
  std::vector<double> subdist;  // F_1(t) .. F_k(t)
  double overall;               // F(t)
};

struct CifTable {
  int k = 0;
  std::vector<CifRow> rows;
};

CifTable cif_table(const Sample& sample);

/// CSV with header `t,F1,...,Fk,F`; shortest round-trip decimal per cell.
void write_cif_csv(std::ostream& out, const CifTable& table);

/// Locale-independent shortest round-trip representation of a double.
std::string format_double(double value);

}  // namespace crindep
