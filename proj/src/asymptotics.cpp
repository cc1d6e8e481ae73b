#include "crindep/asymptotics.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "crindep/ustat_engine.hpp"

namespace crindep {

NullLaw::NullLaw(std::vector<Time> support, std::vector<double> pmf,
                 std::vector<double> proportions, double truncation_tail)
    : support_(std::move(support)),
      pmf_(std::move(pmf)),
      proportions_(std::move(proportions)),
      tail_(truncation_tail) {
  if (support_.empty() || support_.size() != pmf_.size()) {
    throw std::invalid_argument("NullLaw: support and pmf must be non-empty and aligned");
  }
  if (!std::is_sorted(support_.begin(), support_.end()) ||
      std::adjacent_find(support_.begin(), support_.end()) != support_.end()) {
    throw std::invalid_argument("NullLaw: support must be strictly increasing");
  }
  if (proportions_.size() < 2) throw std::invalid_argument("NullLaw: k must be >= 2");
  double pi_total = 0.0;
  for (double p : proportions_) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("NullLaw: proportion outside [0,1]");
    pi_total += p;
  }
  if (std::abs(pi_total - 1.0) > 1e-9) {
    throw std::invalid_argument("NullLaw: proportions must sum to 1");
  }
  cdf_.resize(pmf_.size());
  double running = 0.0;
  for (std::size_t i = 0; i < pmf_.size(); ++i) {
    if (!(pmf_[i] >= 0.0)) throw std::invalid_argument("NullLaw: negative mass");
    running += pmf_[i];
    cdf_[i] = running;
  }
  if (running < 1.0 - tail_ - 1e-9) {
    throw std::invalid_argument("NullLaw: mass " + format_double(running) +
                                " below 1 - truncation_tail");
  }
  upper_.resize(pmf_.size());
  double suffix = 0.0;
  for (std::size_t i = pmf_.size(); i-- > 0;) {
    suffix += cdf_[i] * pmf_[i];
    upper_[i] = suffix;
  }
}

NullLaw NullLaw::from_empirical(const EmpiricalLaw& law) {
  const auto support = law.support();
  std::vector<double> pmf(support.size());
  for (std::size_t i = 0; i < support.size(); ++i) pmf[i] = law.pmf(support[i]);
  const auto pi = law.proportions();
  return NullLaw({support.begin(), support.end()}, std::move(pmf), {pi.begin(), pi.end()});
}

NullLaw NullLaw::from_model(const LifetimeModel& model,
                            std::vector<double> proportions, double tail) {
  const Time last = model.truncation_point(tail);
  std::vector<Time> support(static_cast<std::size_t>(last));
  std::iota(support.begin(), support.end(), Time{1});
  std::vector<double> pmf(support.size());
  for (std::size_t i = 0; i < support.size(); ++i) pmf[i] = model.pmf(support[i]);
  return NullLaw(std::move(support), std::move(pmf), std::move(proportions),
                 model.survival(last));
}

double NullLaw::g1(std::size_t i, Cause c, Cause j) const {
  const double pj = proportions_.at(static_cast<std::size_t>(j - 1));
  const double F = cdf_[i];
  return pj * pj * F * F + (c == j ? 2.0 * pj * upper_[i] : 0.0);
}

double NullLaw::g2(std::size_t i) const {
  const double F = cdf_[i];
  return F * F + 2.0 * upper_[i];
}

double NullLaw::delta2() const {
  double total = 0.0;
  for (std::size_t i = 0; i < pmf_.size(); ++i) total += cdf_[i] * cdf_[i] * pmf_[i];
  return total;
}

double NullLaw::delta1(Cause j) const {
  const double pj = proportions_.at(static_cast<std::size_t>(j - 1));
  return pj * pj * delta2();
}

namespace {

// Sums shared by every closed form:
//   fourth = sum F^4 f        (the four-fold max event)
//   cross  = sum F^2 h f      (I_12 / I_22 terms)
//   upper2 = sum h^2 f        (I_21 term)
//   square = sum F^2 f        (Delta_2)
struct NullSums {
  double fourth = 0.0;
  double cross = 0.0;
  double upper2 = 0.0;
  double square = 0.0;
};

NullSums null_sums(const NullLaw& law) {
  NullSums s;
  const auto f = law.pmf();
  const auto F = law.cdf();
  const auto h = law.upper_moment();
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double F2 = F[i] * F[i];
    s.fourth += F2 * F2 * f[i];
    s.cross += F2 * h[i] * f[i];
    s.upper2 += h[i] * h[i] * f[i];
    s.square += F2 * f[i];
  }
  return s;
}

std::optional<std::string> tail_note(const NullLaw& law, double threshold) {
  if (law.truncation_tail() > threshold) {
    return "truncation tail " + format_double(law.truncation_tail()) +
           " exceeds " + format_double(threshold);
  }
  return std::nullopt;
}

double proportion(const NullLaw& law, Cause j) {
  if (j < 1 || j > law.k()) throw std::out_of_range("cause outside 1..k");
  return law.proportions()[static_cast<std::size_t>(j - 1)];
}

}  // namespace

Estimate var_u1j_null(const NullLaw& law, Cause j, double tail_warning) {
  const double p = proportion(law, j);
  const NullSums s = null_sums(law);
  const double p2 = p * p, p3 = p2 * p, p4 = p2 * p2;
  // E g^2 - (E g)^2 with E g_1j = 3 Delta_1j
  const double v = p4 * s.fourth + 4.0 * p4 * s.cross + 4.0 * p3 * s.upper2 -
                   9.0 * p4 * s.square * s.square;
  return {std::max(v, 0.0), tail_note(law, tail_warning)};
}

Estimate var_u2_null(const NullLaw& law, double tail_warning) {
  const NullSums s = null_sums(law);
  const double v = s.fourth + 4.0 * s.cross + 4.0 * s.upper2 - 9.0 * s.square * s.square;
  return {std::max(v, 0.0), tail_note(law, tail_warning)};
}

Estimate cov_u1j_u1s_null(const NullLaw& law, Cause j, Cause s_cause,
                          double tail_warning) {
  if (j == s_cause) throw std::invalid_argument("use var_u1j_null");
  const double pj = proportion(law, j);
  const double ps = proportion(law, s_cause);
  const NullSums s = null_sums(law);
  // I_11 = 0: one observation cannot carry both causes
  const double w = pj * pj * ps * ps;
  return {w * (s.fourth + 4.0 * s.cross - 9.0 * s.square * s.square),
          tail_note(law, tail_warning)};
}

Estimate cov_u1j_u2_null(const NullLaw& law, Cause j, double tail_warning) {
  const double p = proportion(law, j);
  const NullSums s = null_sums(law);
  return {p * p * (4.0 * s.upper2 + 4.0 * s.cross + s.fourth - 9.0 * s.square * s.square),
          tail_note(law, tail_warning)};
}

CovarianceMatrix assemble_sigma(const NullLaw& law, double tail_warning) {
  const int k = law.k();
  const auto dim = static_cast<Eigen::Index>(k + 1);
  CovarianceMatrix out;
  out.sigma = Eigen::MatrixXd::Zero(dim, dim);
  for (Cause j = 1; j <= k; ++j) {
    const auto jj = static_cast<Eigen::Index>(j - 1);
    out.sigma(jj, jj) = var_u1j_null(law, j, tail_warning).value;
    for (Cause s = j + 1; s <= k; ++s) {
      const auto ss = static_cast<Eigen::Index>(s - 1);
      out.sigma(jj, ss) = out.sigma(ss, jj) = cov_u1j_u1s_null(law, j, s, tail_warning).value;
    }
    out.sigma(jj, dim - 1) = out.sigma(dim - 1, jj) = cov_u1j_u2_null(law, j, tail_warning).value;
  }
  out.sigma(dim - 1, dim - 1) = var_u2_null(law, tail_warning).value;
  if (auto note = tail_note(law, tail_warning)) out.warnings.push_back(*note);

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.sigma,
                                                           Eigen::EigenvaluesOnly);
  out.min_eigenvalue = eig.eigenvalues().minCoeff();
  const double trace = out.sigma.trace();
  if (out.min_eigenvalue < -1e-8 * trace - 1e-15) {
    throw CovarianceError("covariance matrix not positive semi-definite: min eigenvalue " +
                          format_double(out.min_eigenvalue) + ", trace " +
                          format_double(trace));
  }
  return out;
}

namespace {

Eigen::VectorXd coefficient_vector(std::span<const double> proportions) {
  Eigen::VectorXd a(static_cast<Eigen::Index>(proportions.size() + 1));
  for (std::size_t j = 0; j < proportions.size(); ++j) {
    if (!(proportions[j] > 0.0)) {
      throw std::domain_error("asymptotic test undefined; use bootstrap");
    }
    a(static_cast<Eigen::Index>(j)) = 1.0 / proportions[j];
  }
  a(a.size() - 1) = -1.0;
  return a;
}

}  // namespace

double sigma0_sq(const CovarianceMatrix& sigma, std::span<const double> proportions) {
  const Eigen::VectorXd a = coefficient_vector(proportions);
  if (a.size() != sigma.sigma.rows()) {
    throw std::invalid_argument("sigma0_sq: proportions do not match Sigma");
  }
  return std::max(0.0, static_cast<double>(a.dot(sigma.sigma * a)));
}

std::string to_string(VarianceMethod method) {
  return method == VarianceMethod::plug_in ? "plugin" : "jackknife";
}

VarianceMethod parse_variance_method(const std::string& text) {
  if (text == "plugin" || text == "plug-in") return VarianceMethod::plug_in;
  if (text == "jackknife") return VarianceMethod::jackknife;
  throw std::invalid_argument("unknown variance method '" + text +
                              "' (expected plugin or jackknife)");
}

double jackknife_sigma0_sq(const Sample& sample) {
  const std::size_t n = sample.n();
  if (n < 4) throw std::invalid_argument("jackknife needs at least 4 observations");
  // leave-one-out values depend only on the removed (time, cause) pair
  std::map<std::pair<Time, Cause>, std::size_t> multiplicity;
  for (std::size_t i = 0; i < n; ++i) {
    ++multiplicity[{sample.times()[i], sample.causes()[i]}];
  }
  DeltaEvaluator eval(sample.k());
  std::vector<Time> times(n - 1);
  std::vector<Cause> causes(n - 1);
  std::vector<std::pair<double, std::size_t>> values;
  values.reserve(multiplicity.size());
  for (const auto& [key, count] : multiplicity) {
    bool skipped = false;
    std::size_t w = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!skipped && sample.times()[i] == key.first && sample.causes()[i] == key.second) {
        skipped = true;
        continue;
      }
      times[w] = sample.times()[i];
      causes[w] = sample.causes()[i];
      ++w;
    }
    values.emplace_back(eval(times, causes), count);
  }
  double mean = 0.0;
  for (const auto& [v, c] : values) mean += v * static_cast<double>(c);
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (const auto& [v, c] : values) ss += static_cast<double>(c) * (v - mean) * (v - mean);
  // n * Var_jack = n * (n-1)/n * sum (theta_(i) - mean)^2
  return static_cast<double>(n - 1) * ss;
}

AsymptoticTestResult asymptotic_test(const Sample& sample, double alpha,
                                     VarianceMethod method) {
  if (!(alpha > 0.0 && alpha <= 0.5)) {
    throw std::invalid_argument("alpha must lie in (0, 0.5]");
  }
  const UStatistics stats = delta_hat(sample);
  AsymptoticTestResult out;
  out.delta_hat = stats.delta_hat;
  out.alpha = alpha;
  out.method = method;
  // rejects zero proportions before any variance work
  const Eigen::VectorXd a = coefficient_vector(stats.proportions);

  double scale = 0.0;
  if (method == VarianceMethod::plug_in) {
    const NullLaw law = NullLaw::from_empirical(EmpiricalLaw(sample));
    const CovarianceMatrix sigma = assemble_sigma(law);
    out.sigma0_sq = sigma0_sq(sigma, stats.proportions);
    scale = (a.cwiseAbs().transpose() * sigma.sigma.cwiseAbs() * a.cwiseAbs())(0, 0);
    out.warnings = sigma.warnings;
  } else {
    out.sigma0_sq = jackknife_sigma0_sq(sample);
  }
  out.warnings.push_back("experimental: " + to_string(method) +
                         " is one consistent choice of variance estimator");
  if (!(out.sigma0_sq > 1e-8 * scale) || !(out.sigma0_sq > 0.0)) {
    throw DegenerateVariance();
  }
  const boost::math::normal_distribution<double> normal;
  out.z_alpha = boost::math::quantile(boost::math::complement(normal, alpha));
  out.statistic = std::sqrt(static_cast<double>(sample.n())) * stats.delta_hat /
                  std::sqrt(out.sigma0_sq);
  out.reject = out.statistic > out.z_alpha;
  return out;
}

}  // namespace crindep
