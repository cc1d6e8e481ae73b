#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "crindep/asymptotics.hpp"
#include "crindep/simgen.hpp"

using namespace crindep;

namespace {

// Covariance of (g_11, ..., g_1k, g_2)(T, C) by enumerating the joint law
// P(T = t, C = c) = pi_c f(t), with g written out from its definition.
Eigen::MatrixXd enumerated_sigma(const std::vector<double>& f, const std::vector<double>& pi) {
  const std::size_t m = f.size();
  const std::size_t k = pi.size();
  std::vector<double> F(m), h(m);
  double run = 0.0;
  for (std::size_t i = 0; i < m; ++i) F[i] = (run += f[i]);
  for (std::size_t i = 0; i < m; ++i) {
    double later = 0.0;
    for (std::size_t x = i + 1; x < m; ++x) later += F[x] * f[x];
    h[i] = F[i] * f[i] + later;
  }
  const auto dim = static_cast<Eigen::Index>(k + 1);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(dim, dim);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      Eigen::VectorXd g(dim);
      for (std::size_t j = 0; j < k; ++j) {
        g(static_cast<Eigen::Index>(j)) =
            pi[j] * pi[j] * F[i] * F[i] + (c == j ? 2.0 * pi[j] * h[i] : 0.0);
      }
      g(dim - 1) = F[i] * F[i] + 2.0 * h[i];
      const double w = pi[c] * f[i];
      mean += w * g;
      second += w * g * g.transpose();
    }
  }
  return second - mean * mean.transpose();
}

std::vector<double> geometric_pmf(double p, std::size_t len) {
  std::vector<double> f(len);
  for (std::size_t i = 0; i < len; ++i) f[i] = p * std::pow(1 - p, static_cast<double>(i));
  return f;
}

NullLaw law_from(const std::vector<double>& f, const std::vector<double>& pi) {
  std::vector<Time> support(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) support[i] = static_cast<Time>(i + 1);
  double mass = 0.0;
  for (double v : f) mass += v;
  return NullLaw(support, f, pi, std::max(0.0, 1.0 - mass));
}

}  // namespace

TEST_CASE("closed forms equal the enumerated covariance of the g functions") {
  const std::vector<std::vector<double>> laws{
      {0.5, 0.5},
      {0.2, 0.5, 0.3},
      {0.1, 0.0, 0.4, 0.25, 0.25},
      geometric_pmf(0.3, 120),
  };
  const std::vector<std::vector<double>> proportions{
      {0.5, 0.5}, {0.2, 0.8}, {0.2, 0.3, 0.5}, {0.1, 0.2, 0.3, 0.4}};
  for (const auto& f : laws) {
    for (const auto& pi : proportions) {
      const NullLaw law = law_from(f, pi);
      const Eigen::MatrixXd oracle = enumerated_sigma(f, pi);
      const CovarianceMatrix sigma = assemble_sigma(law, 1.0);
      for (Eigen::Index r = 0; r < oracle.rows(); ++r) {
        for (Eigen::Index c = 0; c < oracle.cols(); ++c) {
          CHECK(sigma.sigma(r, c) == doctest::Approx(oracle(r, c)).epsilon(1e-9).scale(1e-12));
        }
      }
      const int k = static_cast<int>(pi.size());
      for (Cause j = 1; j <= k; ++j) {
        const auto jj = static_cast<Eigen::Index>(j - 1);
        CHECK(var_u1j_null(law, j, 1.0).value == doctest::Approx(oracle(jj, jj)).scale(1e-12));
        CHECK(cov_u1j_u2_null(law, j, 1.0).value ==
              doctest::Approx(oracle(jj, k)).scale(1e-12));
        for (Cause s = 1; s <= k; ++s) {
          if (s == j) continue;
          CHECK(cov_u1j_u1s_null(law, j, s, 1.0).value ==
                doctest::Approx(oracle(jj, static_cast<Eigen::Index>(s - 1))).scale(1e-12));
        }
      }
      CHECK(var_u2_null(law, 1.0).value == doctest::Approx(oracle(k, k)).scale(1e-12));
    }
  }
}

TEST_CASE("two-point law by hand") {
  // F = (1/2, 1); h = (3/4, 1/2); g_2 = (7/4, 2), mean 15/8
  const NullLaw law = law_from({0.5, 0.5}, {0.5, 0.5});
  CHECK(var_u2_null(law).value == doctest::Approx(0.015625).epsilon(1e-14));
  CHECK(law.g2(0) == doctest::Approx(1.75));
  CHECK(law.g2(1) == doctest::Approx(2.0));
  CHECK(law.delta2() == doctest::Approx(0.625));
  CHECK(law.delta1(1) == doctest::Approx(0.25 * 0.625));
}

TEST_CASE("g means are three times the Delta terms") {
  const auto f = geometric_pmf(0.4, 80);
  const NullLaw law = law_from(f, {0.3, 0.7});
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (Cause c = 1; c <= 2; ++c) {
      const double w = law.proportions()[static_cast<std::size_t>(c - 1)] * f[i];
      m1 += w * law.g1(i, c, 1);
      m2 += w * law.g2(i);
    }
  }
  CHECK(m1 == doctest::Approx(3 * law.delta1(1)).epsilon(1e-12));
  CHECK(m2 == doctest::Approx(3 * law.delta2()).epsilon(1e-12));
}

TEST_CASE("degenerate one-point law gives a zero matrix") {
  const NullLaw one = law_from({1.0}, {1.0, 0.0});
  const auto sigma = assemble_sigma(one);
  CHECK(sigma.sigma.cwiseAbs().maxCoeff() < 1e-15);
  CHECK(var_u1j_null(one, 1).value == doctest::Approx(0.0).scale(1e-15));
  // a random cause keeps I(C = j) h(T) random even with T fixed
  const NullLaw law = law_from({1.0}, {0.5, 0.5});
  CHECK(var_u2_null(law).value == doctest::Approx(0.0).scale(1e-15));
  CHECK(var_u1j_null(law, 1).value == doctest::Approx(0.25));
  CHECK(cov_u1j_u2_null(law, 1).value == doctest::Approx(0.0).scale(1e-15));
}

TEST_CASE("absent cause") {
  const NullLaw law = law_from(geometric_pmf(0.5, 60), {0.0, 1.0});
  CHECK(var_u1j_null(law, 1).value == 0.0);
  CHECK(cov_u1j_u2_null(law, 1).value == 0.0);
  CHECK(cov_u1j_u1s_null(law, 1, 2).value == 0.0);
  CHECK_THROWS_WITH_AS(cov_u1j_u1s_null(law, 2, 2), "use var_u1j_null", std::invalid_argument);
}

TEST_CASE("sigma is symmetric and positive semi-definite") {
  for (double p : {0.1, 0.3, 0.5, 0.7}) {
    const NullLaw law = NullLaw::from_model(LifetimeModel::geometric(p), {0.2, 0.3, 0.5});
    const auto sigma = assemble_sigma(law);
    CHECK((sigma.sigma - sigma.sigma.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(sigma.min_eigenvalue >= -1e-8 * sigma.sigma.trace());
    for (Eigen::Index i = 0; i < sigma.sigma.rows(); ++i) CHECK(sigma.sigma(i, i) >= 0.0);
    CHECK(sigma.warnings.empty());
  }
}

TEST_CASE("extending the truncation changes nothing visible") {
  const auto model = LifetimeModel::geometric(0.3);
  const NullLaw base = NullLaw::from_model(model, {0.5, 0.5}, 1e-9);
  const Time last = base.support().back();
  std::vector<Time> support;
  std::vector<double> pmf;
  for (Time t = 1; t <= last + 20; ++t) {
    support.push_back(t);
    pmf.push_back(model.pmf(t));
  }
  const NullLaw longer(support, pmf, {0.5, 0.5}, model.survival(last + 20));
  const auto a = assemble_sigma(base);
  const auto b = assemble_sigma(longer);
  CHECK((a.sigma - b.sigma).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("coarse truncation attaches a warning") {
  const auto f = geometric_pmf(0.5, 10);
  const NullLaw law = law_from(f, {0.5, 0.5});
  CHECK(law.truncation_tail() > 1e-8);
  CHECK(var_u2_null(law).warning.has_value());
  CHECK_FALSE(assemble_sigma(law).warnings.empty());
}

TEST_CASE("sigma0_sq quadratic form") {
  CovarianceMatrix zero{Eigen::MatrixXd::Zero(3, 3), 0.0, {}};
  const std::vector<double> half{0.5, 0.5};
  CHECK(sigma0_sq(zero, half) == 0.0);
  CovarianceMatrix id{Eigen::MatrixXd::Identity(3, 3), 1.0, {}};
  CHECK(sigma0_sq(id, half) == doctest::Approx(9.0));
  CHECK_THROWS_WITH_AS(sigma0_sq(id, std::vector<double>{1.0, 0.0}),
                       "asymptotic test undefined; use bootstrap", std::domain_error);
}

TEST_CASE("a' g vanishes pointwise under independence") {
  // sum_j g_1j / pi_j - g_2 = sum_j (pi_j F^2 + 2 I(c=j) h) - F^2 - 2h = 0
  const NullLaw law = NullLaw::from_model(LifetimeModel::geometric(0.5), {0.3, 0.7});
  for (std::size_t i = 0; i < law.support().size(); ++i) {
    for (Cause c = 1; c <= 2; ++c) {
      const double v = law.g1(i, c, 1) / 0.3 + law.g1(i, c, 2) / 0.7 - law.g2(i);
      CHECK(std::abs(v) < 1e-12);
    }
  }
  const auto sigma = assemble_sigma(law);
  CHECK(sigma0_sq(sigma, law.proportions()) < 1e-12);
}

TEST_CASE("asymptotic test error paths") {
  const Sample tied(std::vector<Time>(20, 3), {1, 2, 1, 2, 1, 2, 1, 2, 1, 2,
                                               1, 2, 1, 2, 1, 2, 1, 2, 1, 2}, 2);
  CHECK_THROWS_WITH_AS(asymptotic_test(tied, 0.05), "degenerate variance, use bootstrap",
                       DegenerateVariance);
  const Sample missing({1, 2, 3, 4}, {1, 1, 1, 1}, 2);
  CHECK_THROWS_WITH_AS(asymptotic_test(missing, 0.05), "asymptotic test undefined; use bootstrap",
                       std::domain_error);
  CHECK_THROWS_AS(asymptotic_test(missing, 0.7), std::invalid_argument);
}

TEST_CASE("plug-in variance is degenerate on any sample") {
  const DependentFamily fam(LifetimeModel::geometric(0.3), 1.5, {0.5});
  Rng rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const auto s = sample_competing_risks(fam, 200, rng);
    CHECK_THROWS_AS(asymptotic_test(s, 0.05, VarianceMethod::plug_in), DegenerateVariance);
  }
}

TEST_CASE("jackknife test is one-sided and consistent") {
  Rng rng(8);
  const DependentFamily strong(LifetimeModel::geometric(0.3), 2.0, {0.5});
  const auto s = sample_competing_risks(strong, 300, rng);
  const auto res = asymptotic_test(s, 0.05, VarianceMethod::jackknife);
  CHECK(res.sigma0_sq > 0.0);
  CHECK(res.z_alpha == doctest::Approx(1.6448536269514722));
  CHECK(res.reject == (res.statistic > res.z_alpha));
  CHECK_FALSE(res.warnings.empty());

  // delta_hat < 0: never rejects
  const Sample neg({1, 1, 2, 2, 3, 3, 4, 4, 5, 5}, {1, 2, 1, 2, 1, 2, 1, 2, 1, 2}, 2);
  const auto r = asymptotic_test(neg, 0.5, VarianceMethod::jackknife);
  CHECK(r.delta_hat < 0.0);
  CHECK_FALSE(r.reject);
}

TEST_CASE("jackknife matches a naive leave-one-out loop") {
  const Sample s({1, 3, 3, 2, 5, 5, 5, 4, 2, 1, 6}, {1, 2, 2, 1, 1, 2, 1, 2, 2, 1, 1}, 2);
  const std::size_t n = s.n();
  std::vector<double> loo;
  for (std::size_t drop = 0; drop < n; ++drop) {
    std::vector<Time> ts;
    std::vector<Cause> cs;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == drop) continue;
      ts.push_back(s.times()[i]);
      cs.push_back(s.causes()[i]);
    }
    loo.push_back(delta_hat(Sample(ts, cs, 2)).delta_hat);
  }
  double mean = 0.0;
  for (double v : loo) mean += v / static_cast<double>(n);
  double ss = 0.0;
  for (double v : loo) ss += (v - mean) * (v - mean);
  CHECK(jackknife_sigma0_sq(s) == doctest::Approx(static_cast<double>(n - 1) * ss).epsilon(1e-12));
}
