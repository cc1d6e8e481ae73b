// Null asymptotics of U = (U_11, ..., U_1k, U_2).
//
// Everything is stated through the first-order projections
//
//   g_1j(t, c) = pi_j^2 F(t)^2 + 2 pi_j I(c = j) h(t),
//   g_2(t)     = F(t)^2 + 2 h(t),          h(t) = sum_{x >= t} F(x) f(x),
//
// which are three times E[psi | X_1] for the averaged kernels. The
// asymptotic covariance of sqrt(n) U is then Cov(g, g'); no separate factor
// of 9 is applied.

#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crindep/core_model.hpp"
#include "crindep/simgen.hpp"

namespace crindep {

/// A lifetime law with C independent of T: F_j = pi_j F.
class NullLaw {
 public:
  /// pmf[i] is the mass at support[i] (strictly increasing). F is the prefix
  /// sum of pmf. truncation_tail bounds the mass not represented.
  NullLaw(std::vector<Time> support, std::vector<double> pmf,
          std::vector<double> proportions, double truncation_tail = 0.0);

  /// Plug-in law (F_hat, f_hat, pi_hat) of a sample.
  static NullLaw from_empirical(const EmpiricalLaw& law);
  /// Model law truncated where the survival mass drops to `tail`.
  static NullLaw from_model(const LifetimeModel& model,
                            std::vector<double> proportions, double tail = 1e-10);

  int k() const noexcept { return static_cast<int>(proportions_.size()); }
  std::span<const Time> support() const noexcept { return support_; }
  std::span<const double> pmf() const noexcept { return pmf_; }
  std::span<const double> cdf() const noexcept { return cdf_; }
  /// h at each support point.
  std::span<const double> upper_moment() const noexcept { return upper_; }
  std::span<const double> proportions() const noexcept { return proportions_; }
  double truncation_tail() const noexcept { return tail_; }

  /// g_1j and g_2 evaluated at support index i.
  double g1(std::size_t i, Cause c, Cause j) const;
  double g2(std::size_t i) const;

  /// Delta_1j = pi_j^2 sum F^2 f and Delta_2 = sum F^2 f under this law.
  double delta1(Cause j) const;
  double delta2() const;

 private:
  std::vector<Time> support_;
  std::vector<double> pmf_;
  std::vector<double> cdf_;
  std::vector<double> upper_;
  std::vector<double> proportions_;
  double tail_;
};

struct Estimate {
  double value = 0.0;
  std::optional<std::string> warning;
};

/// Tail mass above which results carry a truncation warning.
inline constexpr double kDefaultTailWarning = 1e-8;

Estimate var_u1j_null(const NullLaw& law, Cause j,
                      double tail_warning = kDefaultTailWarning);
Estimate var_u2_null(const NullLaw& law, double tail_warning = kDefaultTailWarning);
/// Throws std::invalid_argument for j == s ("use var_u1j_null").
Estimate cov_u1j_u1s_null(const NullLaw& law, Cause j, Cause s,
                          double tail_warning = kDefaultTailWarning);
Estimate cov_u1j_u2_null(const NullLaw& law, Cause j,
                         double tail_warning = kDefaultTailWarning);

struct CovarianceMatrix {
  Eigen::MatrixXd sigma;  // order (U_11, ..., U_1k, U_2)
  double min_eigenvalue = 0.0;
  std::vector<std::string> warnings;
};

/// Raised when Sigma fails the PSD check (min eigenvalue < -1e-8 trace).
class CovarianceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

CovarianceMatrix assemble_sigma(const NullLaw& law,
                                double tail_warning = kDefaultTailWarning);

/// a' Sigma a with a = (1/pi_1, ..., 1/pi_k, -1).
double sigma0_sq(const CovarianceMatrix& sigma, std::span<const double> proportions);

class DegenerateVariance : public std::runtime_error {
 public:
  DegenerateVariance() : std::runtime_error("degenerate variance, use bootstrap") {}
};

enum class VarianceMethod { plug_in, jackknife };

std::string to_string(VarianceMethod method);
VarianceMethod parse_variance_method(const std::string& text);

struct AsymptoticTestResult {
  double delta_hat = 0.0;
  double statistic = 0.0;  // sqrt(n) delta_hat / sigma0_hat
  double sigma0_sq = 0.0;
  double z_alpha = 0.0;
  double alpha = 0.05;
  bool reject = false;
  VarianceMethod method = VarianceMethod::plug_in;
  std::vector<std::string> warnings;
};

/// Jackknife estimate of the variance of sqrt(n) delta_hat; needs n >= 4.
double jackknife_sigma0_sq(const Sample& sample);

/// One-sided z-test, reject when sqrt(n) delta_hat / sigma0_hat > z_alpha.
/// Throws std::domain_error if some pi_hat_j = 0 (plug-in) and
/// DegenerateVariance when sigma0_hat^2 vanishes.
AsymptoticTestResult asymptotic_test(const Sample& sample, double alpha,
                                     VarianceMethod method = VarianceMethod::plug_in);

}  // namespace crindep
