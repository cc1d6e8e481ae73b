#include "crindep/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crindep/ustat_engine.hpp"

namespace crindep {

std::string to_string(CauseScheme scheme) {
  return scheme == CauseScheme::uniform ? "uniform" : "empirical";
}

CauseScheme parse_cause_scheme(const std::string& text) {
  if (text == "uniform") return CauseScheme::uniform;
  if (text == "empirical") return CauseScheme::empirical;
  throw std::invalid_argument("unknown cause scheme '" + text +
                              "' (expected uniform or empirical)");
}

void BootstrapConfig::validate() const {
  if (replicates < 100) {
    throw std::invalid_argument("bootstrap replicate count must be at least 100");
  }
  if (alpha_levels.empty()) throw std::invalid_argument("no significance levels");
  for (double a : alpha_levels) {
    if (!(a > 0.0 && a < 1.0)) {
      throw std::invalid_argument("significance level " + format_double(a) +
                                  " outside (0, 1)");
    }
  }
}

namespace {

void draw_null(std::span<const Time> times, std::span<const Cause> causes, int k,
               CauseScheme scheme, Rng& rng, std::span<Time> out_times,
               std::span<Cause> out_causes) {
  const std::uint64_t n = times.size();
  for (std::size_t i = 0; i < out_times.size(); ++i) {
    out_times[i] = times[rng.below(n)];
    out_causes[i] = scheme == CauseScheme::uniform
                        ? static_cast<Cause>(1 + rng.below(static_cast<std::uint64_t>(k)))
                        : causes[rng.below(n)];
  }
}

}  // namespace

Sample null_bootstrap_sample(const Sample& sample, CauseScheme scheme, Rng& rng) {
  std::vector<Time> times(sample.n());
  std::vector<Cause> causes(sample.n());
  draw_null(sample.times(), sample.causes(), sample.k(), scheme, rng, times, causes);
  return Sample(std::move(times), std::move(causes), sample.k());
}

double upper_order_statistic(std::span<const double> sorted, double alpha) {
  if (sorted.empty()) throw std::invalid_argument("empty null distribution");
  const double b = static_cast<double>(sorted.size());
  // guard against (1 - alpha) * B landing a rounding unit above an integer
  auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * b - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

std::vector<double> bootstrap_null_distribution(const Sample& sample,
                                                const BootstrapConfig& config) {
  config.validate();
  if (sample.n() < 3) throw InsufficientSample();
  const unsigned workers = resolve_threads(config.threads);
  std::vector<double> values(config.replicates);
  std::vector<DeltaEvaluator> evaluators(workers, DeltaEvaluator(sample.k()));
  std::vector<std::vector<Time>> time_buf(workers, std::vector<Time>(sample.n()));
  std::vector<std::vector<Cause>> cause_buf(workers, std::vector<Cause>(sample.n()));
  parallel_for(config.replicates, workers, [&](std::size_t b, unsigned w) {
    Rng rng = Rng::stream(config.seed, {b});
    draw_null(sample.times(), sample.causes(), sample.k(), config.scheme, rng,
              time_buf[w], cause_buf[w]);
    values[b] = evaluators[w](time_buf[w], cause_buf[w]);
  });
  std::sort(values.begin(), values.end());
  return values;
}

std::vector<CriticalValue> bootstrap_critical_values(const Sample& sample,
                                                     const BootstrapConfig& config) {
  const auto null = bootstrap_null_distribution(sample, config);
  std::vector<CriticalValue> out;
  for (double a : config.alpha_levels) {
    out.push_back({a, upper_order_statistic(null, a)});
  }
  return out;
}

TestReport independence_test(const Sample& sample, const BootstrapConfig& config) {
  const UStatistics stats = delta_hat(sample);
  const auto null = bootstrap_null_distribution(sample, config);

  TestReport report;
  report.delta_hat = stats.delta_hat;
  report.replicates = config.replicates;
  report.scheme = config.scheme;
  report.seed = config.seed;
  report.n = sample.n();
  report.k = sample.k();
  report.proportions = stats.proportions;
  for (double a : config.alpha_levels) {
    const double cv = upper_order_statistic(null, a);
    report.critical_values.push_back({a, cv});
    report.reject.push_back(stats.delta_hat > cv);
  }
  const auto first_at_least =
      std::lower_bound(null.begin(), null.end(), stats.delta_hat);
  const auto exceed = static_cast<double>(std::distance(first_at_least, null.end()));
  report.p_value = (1.0 + exceed) / (static_cast<double>(null.size()) + 1.0);
  return report;
}

nlohmann::ordered_json to_json(const TestReport& report) {
  nlohmann::ordered_json cv = nlohmann::ordered_json::object();
  nlohmann::ordered_json decisions = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < report.critical_values.size(); ++i) {
    const std::string key = format_double(report.critical_values[i].alpha);
    cv[key] = report.critical_values[i].value;
    decisions[key] = report.reject[i] ? "reject" : "accept";
  }
  nlohmann::ordered_json out;
  out["delta_hat"] = report.delta_hat;
  out["critical_values"] = std::move(cv);
  out["p_value"] = report.p_value;
  out["decisions"] = std::move(decisions);
  out["B"] = report.replicates;
  out["scheme"] = to_string(report.scheme);
  out["seed"] = report.seed;
  out["n"] = report.n;
  out["k"] = report.k;
  out["proportions"] = report.proportions;
  return out;
}

}  // namespace crindep
