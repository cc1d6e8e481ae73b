// Bootstrap null distribution of delta_hat and the bootstrap independence test.
//
// Null replicates resample the observed lifetimes with replacement and attach
// causes drawn independently of them, either uniformly on {1..k} or from the
// observed cause proportions.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "crindep/core_model.hpp"
#include "crindep/detail/parallel.hpp"
#include "crindep/rng.hpp"

namespace crindep {

enum class CauseScheme { uniform, empirical };

std::string to_string(CauseScheme scheme);
CauseScheme parse_cause_scheme(const std::string& text);

struct BootstrapConfig {
  std::size_t replicates = 1000;
  std::vector<double> alpha_levels{0.05, 0.01};
  CauseScheme scheme = CauseScheme::uniform;
  std::uint64_t seed = 20210601;
  /// 0 picks std::thread::hardware_concurrency().
  unsigned threads = 1;

  /// Throws std::invalid_argument unless replicates >= 100 and every level
  /// lies in (0, 1).
  void validate() const;
};

Sample null_bootstrap_sample(const Sample& sample, CauseScheme scheme, Rng& rng);

/// Upper (1 - alpha) point of an ascending sample: the order statistic at
/// 1-based index ceil((1 - alpha) * B).
double upper_order_statistic(std::span<const double> sorted, double alpha);

/// Delta_hat over B null replicates, sorted ascending. Replicate b always
/// draws from Rng::stream(seed, {b}), so the result does not depend on the
/// thread count.
std::vector<double> bootstrap_null_distribution(const Sample& sample,
                                                const BootstrapConfig& config);

struct CriticalValue {
  double alpha;
  double value;
};

std::vector<CriticalValue> bootstrap_critical_values(const Sample& sample,
                                                     const BootstrapConfig& config);

struct TestReport {
  double delta_hat = 0.0;
  std::vector<CriticalValue> critical_values;
  double p_value = 1.0;
  std::vector<bool> reject;  // aligned with critical_values
  std::size_t replicates = 0;
  CauseScheme scheme = CauseScheme::uniform;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  int k = 0;
  std::vector<double> proportions;
};

TestReport independence_test(const Sample& sample, const BootstrapConfig& config);

/// Stable schema: delta_hat, critical_values, p_value, decisions, B, scheme,
/// seed, n, k, proportions. Levels are keyed by their shortest decimal form.
nlohmann::ordered_json to_json(const TestReport& report);

}  // namespace crindep
