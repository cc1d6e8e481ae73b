#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "crindep/resampling.hpp"
#include "crindep/simgen.hpp"
#include "crindep/ustat_engine.hpp"

using namespace crindep;

namespace {

Sample family_sample(double a, std::size_t n, std::uint64_t seed) {
  const DependentFamily fam(LifetimeModel::geometric(0.3), a, {0.5});
  Rng rng(seed);
  return sample_competing_risks(fam, n, rng);
}

}  // namespace

TEST_CASE("uniform scheme labels are uniform and times come from the sample") {
  const Sample s({3, 7, 7, 11, 2}, {1, 1, 1, 1, 1}, 3);
  const std::set<Time> observed(s.times().begin(), s.times().end());
  Rng rng(1);
  std::vector<std::size_t> counts(3, 0);
  std::size_t total = 0;
  while (total < 100000) {
    const auto b = null_bootstrap_sample(s, CauseScheme::uniform, rng);
    CHECK(b.k() == 3);
    for (std::size_t i = 0; i < b.n(); ++i) {
      REQUIRE(observed.contains(b.times()[i]));
      ++counts[static_cast<std::size_t>(b.causes()[i] - 1)];
      ++total;
    }
  }
  for (auto c : counts) {
    CHECK(static_cast<double>(c) / static_cast<double>(total) == doctest::Approx(1.0 / 3).epsilon(0.03));
  }
}

TEST_CASE("empirical scheme with a single observed cause") {
  const Sample s({1, 2, 3, 4}, {1, 1, 1, 1}, 2);
  Rng rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    const auto b = null_bootstrap_sample(s, CauseScheme::empirical, rng);
    for (Cause c : b.causes()) CHECK(c == 1);
  }
}

TEST_CASE("empirical scheme follows the observed proportions") {
  const Sample s({1, 2, 3, 4, 5}, {1, 2, 2, 2, 2}, 2);
  Rng rng(3);
  std::size_t ones = 0;
  const int reps = 20000;
  for (int rep = 0; rep < reps; ++rep) {
    const auto b = null_bootstrap_sample(s, CauseScheme::empirical, rng);
    for (Cause c : b.causes()) {
      ones += c == 1 ? 1 : 0;
    }
  }
  CHECK(static_cast<double>(ones) / (5.0 * reps) == doctest::Approx(0.2).epsilon(0.03));
}

TEST_CASE("fixed seed gives the same bootstrap sample") {
  const auto s = family_sample(1.5, 40, 8);
  Rng a(42);
  Rng b(42);
  CHECK(null_bootstrap_sample(s, CauseScheme::uniform, a) ==
        null_bootstrap_sample(s, CauseScheme::uniform, b));
}

TEST_CASE("order statistic convention") {
  std::vector<double> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i + 1);
  CHECK(upper_order_statistic(v, 0.05) == 950.0);
  CHECK(upper_order_statistic(v, 0.01) == 990.0);
  CHECK(upper_order_statistic(v, 0.5) == 500.0);
  std::vector<double> w(2000);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<double>(i + 1);
  CHECK(upper_order_statistic(w, 0.05) == 1900.0);
  std::vector<double> odd(101);
  for (std::size_t i = 0; i < odd.size(); ++i) odd[i] = static_cast<double>(i + 1);
  // ceil(0.95 * 101) = 96
  CHECK(upper_order_statistic(odd, 0.05) == 96.0);
  CHECK_THROWS_AS(upper_order_statistic(std::vector<double>{}, 0.05), std::invalid_argument);
}

TEST_CASE("all-tied times give a constant null distribution") {
  const Sample s(std::vector<Time>(50, 4), std::vector<Cause>(50, 1), 2);
  BootstrapConfig cfg;
  cfg.replicates = 200;
  const auto null = bootstrap_null_distribution(s, cfg);
  // with every time tied, delta_hat = -(k' - 1) / (n - 1), k' causes present
  for (double v : null) CHECK(v == doctest::Approx(-1.0 / 49).epsilon(1e-12));
  const auto cv = bootstrap_critical_values(s, cfg);
  CHECK(cv[0].value == doctest::Approx(-1.0 / 49).epsilon(1e-12));
  CHECK(cv[1].value == doctest::Approx(-1.0 / 49).epsilon(1e-12));
}

TEST_CASE("critical values are monotone and decisions consistent") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = family_sample(seed % 2 ? 2.0 : 1.0, 30 + seed * 7, seed);
    BootstrapConfig cfg;
    cfg.replicates = 300;
    cfg.alpha_levels = {0.5, 0.1, 0.05, 0.01};
    cfg.seed = seed;
    const auto report = independence_test(s, cfg);
    for (std::size_t i = 1; i < report.critical_values.size(); ++i) {
      CHECK(report.critical_values[i].value >= report.critical_values[i - 1].value);
    }
    for (std::size_t i = 0; i < report.critical_values.size(); ++i) {
      CHECK(report.reject[i] == (report.delta_hat > report.critical_values[i].value));
    }
    CHECK(report.p_value > 0.0);
    CHECK(report.p_value <= 1.0);
    CHECK(report.delta_hat == delta_hat(s).delta_hat);
  }
}

TEST_CASE("p-value counts replicates at or above the observed value") {
  const auto s = family_sample(1.2, 60, 4);
  BootstrapConfig cfg;
  cfg.replicates = 500;
  const auto null = bootstrap_null_distribution(s, cfg);
  const double observed = delta_hat(s).delta_hat;
  const double at_least = static_cast<double>(
      std::count_if(null.begin(), null.end(), [&](double v) { return v >= observed; }));
  CHECK(independence_test(s, cfg).p_value == doctest::Approx((1 + at_least) / 501.0));
}

TEST_CASE("report is deterministic and independent of thread count") {
  const auto s = family_sample(1.5, 80, 12);
  BootstrapConfig cfg;
  cfg.replicates = 400;
  cfg.seed = 99;
  const auto a = to_json(independence_test(s, cfg)).dump();
  const auto b = to_json(independence_test(s, cfg)).dump();
  cfg.threads = 4;
  const auto c = to_json(independence_test(s, cfg)).dump();
  CHECK(a == b);
  CHECK(a == c);
  cfg.seed = 100;
  CHECK(to_json(independence_test(s, cfg)).dump() != a);
}

TEST_CASE("report json schema") {
  const auto s = family_sample(1.0, 30, 1);
  BootstrapConfig cfg;
  cfg.replicates = 100;
  const auto j = to_json(independence_test(s, cfg));
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"delta_hat", "critical_values", "p_value", "decisions",
                                         "B", "scheme", "seed", "n", "k", "proportions"});
  CHECK(j["critical_values"].contains("0.05"));
  CHECK(j["critical_values"].contains("0.01"));
  CHECK(j["scheme"] == "uniform");
  CHECK(j["B"] == 100);
  const std::string d = j["decisions"]["0.05"];
  CHECK((d == "reject" || d == "accept"));
}

TEST_CASE("config validation") {
  BootstrapConfig cfg;
  cfg.replicates = 99;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.replicates = 100;
  cfg.alpha_levels = {0.0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.alpha_levels = {1.0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.alpha_levels = {0.05};
  CHECK_NOTHROW(cfg.validate());
  CHECK_THROWS_AS(independence_test(Sample({1, 2}, {1, 2}, 2), cfg), InsufficientSample);
  CHECK(parse_cause_scheme("empirical") == CauseScheme::empirical);
  CHECK_THROWS_AS(parse_cause_scheme("bogus"), std::invalid_argument);
}

TEST_CASE("rejections are rare under independence and common under strong dependence") {
  BootstrapConfig cfg;
  cfg.replicates = 200;
  cfg.alpha_levels = {0.05};
  int null_rejects = 0;
  int alt_rejects = 0;
  for (std::uint64_t r = 0; r < 60; ++r) {
    cfg.seed = r;
    null_rejects += independence_test(family_sample(1.0, 100, 1000 + r), cfg).reject[0] ? 1 : 0;
    alt_rejects += independence_test(family_sample(2.0, 100, 2000 + r), cfg).reject[0] ? 1 : 0;
  }
  CHECK(null_rejects <= 10);
  CHECK(alt_rejects >= 50);
}
